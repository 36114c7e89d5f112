"""Feature selection and weighting by gradient descent on the differentiable
information imbalance (DII).

The DII scores how well nearest neighbors in a weighted input feature space
predict neighbor ranks in a ground-truth distance space.  Minimizing it by
gradient descent learns per-feature scaling weights; L1 clipping or backward
greedy elimination turn the weights into sparse feature subsets.
"""

from .core import (
    DegenerateMetricError,
    DegenerateNeighborhoodsError,
    adaptive_lambda,
    classic_imbalance,
    dii_gradient,
    dii_value,
    rank_matrix,
    softmax_coefficients,
    weighted_distances,
)
from .datasets import (
    DatasetBundle,
    cosine_similarity,
    gen_gaussian_benchmark,
    gen_monomial_benchmark,
    load_csv,
    standardize,
)
from .gradcheck import finite_difference_gradient, gradient_check
from .optim import (
    OptimizationTrace,
    OptimizerConfig,
    OverRegularizedError,
    evaluate_dii_fixed,
    ground_truth_ranks,
    initial_weights,
    l1_clip_step,
    learning_rate,
    optimize_dii,
)
from .sparsify import (
    BlockSplit,
    CrossValResult,
    SparsityPath,
    block_cross_validate,
    exhaustive_search,
    greedy_backward,
    lasso_search,
    subsample_rows,
)

__version__ = "0.1.0"
