"""Weighted spanning trees on finite electric networks.

Subpackages: netcore (network model and generators), resist (effective
resistance engine), sample (exact tree samplers and oracles), env (the
beta random-environment model), localstat (local-limit statistics),
expcli (experiments and CLI), oracles (brute-force reference laws).
"""

from .netcore import (BalanceReport, ElectricNetwork, balance_report,
                      build_network, gen_complete, gen_expander_chain_with_leaves,
                      gen_glued_triangle_chain, gen_regular_plus_pendants,
                      read_network, write_network)
from .resist import (ResistanceSolver, effective_resistance,
                     effective_resistance_to_set, foster_sum,
                     kirchhoff_edge_probability, commute_time,
                     nash_williams_bound, partition_function_log)
from .sample import (RngStream, SpanningTree, aldous_broder_sample,
                     conditioned_sample, enumerate_spanning_trees, kruskal_min,
                     max_st, wilson_sample)
from .env import (Environment, ScaleSeparatedWst, draw_environment,
                  edge_tree_marginals, mst_path_max, mu,
                  sample_environment_tree, significant_edges,
                  tree_symmetric_difference)
from .localstat import (LocalCensus, RootedTreePattern, b_value, ball,
                        canonicalize, census, f_value,
                        pgw_reference_probability, random_t_tuple, theorem_sum)
from .expcli import (ExperimentConfig, SweepRow, census_compare,
                     component_count_integral, length_sweep, overlap_exact,
                     overlap_sweep, total_length, verify)

__version__ = "0.1.0"
