"""k-NN graph scan estimators for hidden community baselines on noisy graphs."""

__version__ = "0.1.0"

from .graph import (AttributedGraph, GroundTruth, graph_from_pairs,
                    load_attributes_csv, load_edge_list, load_gml,
                    set_observations, write_edge_list)
from .neighborhoods import (ExactNeighborhood, LayeredNeighborhood,
                            NeighborhoodFamily, bfs_layers, build_family,
                            exact_neighborhood)
from .estimators import (SUBLEVEL, SUPERLEVEL,
                         CrawlerEstimate, ScanResult, crawler_estimates,
                         neighborhood_sum, scan_phase1, scan_phase2,
                         scan_sublevel, scan_superlevel, shifted_mean)
from .bounds import (BoundInputs, BoundReport, NeighborhoodSummary,
                     bernstein_tail, check_assumption1, family_summaries,
                     pairing_deltas, r_functional, selection_bound,
                     summarize_neighborhood)
from .simulation import (AdversaryStrategy, ExperimentConfig, GameRecord,
                         NoiseModel, TwoSubgraphSpec, adversary_act,
                         apply_noise, generate_two_subgraph,
                         play_multistep_game, run_adversary_scenario,
                         run_monte_carlo)
from .errors import FamilyError, GraphFormatError, GraphScanError, ValidationError
