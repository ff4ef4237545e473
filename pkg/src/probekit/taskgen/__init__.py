from .dataset import (
    ProbingDataset,
    ProbingInstance,
    assign_splits,
    compute_balance,
    dedupe_across_splits,
    import_senteval_tsv,
    kfold_splits,
    read_dataset,
    rebalance,
    write_dataset,
)
from .generators import (
    gen_bigram_shift,
    gen_length,
    gen_sv_agree,
    gen_sv_dist,
    gen_subj_number,
    gen_tree_depth,
    gen_voice,
    gen_word_content,
    sv_dist_bin,
)

__all__ = [
    "ProbingDataset",
    "ProbingInstance",
    "assign_splits",
    "compute_balance",
    "dedupe_across_splits",
    "import_senteval_tsv",
    "kfold_splits",
    "read_dataset",
    "rebalance",
    "write_dataset",
    "gen_bigram_shift",
    "gen_length",
    "gen_sv_agree",
    "gen_sv_dist",
    "gen_subj_number",
    "gen_tree_depth",
    "gen_voice",
    "gen_word_content",
    "sv_dist_bin",
]
