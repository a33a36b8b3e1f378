"""From-scratch convolutional network engine with exact analytic gradients."""

from .model import (  # noqa: F401
    Checkpoint,
    LayerSpec,
    ModelConfig,
    build_preset,
    conv2d,
    dense,
    flatten,
    infer_shapes,
    init_parameters,
    maxpool2d,
    mini_vgg,
    num_parameters,
    relu_spec,
    softmax_spec,
    vgg16_shape,
)
from .train import TrainConfig, predict, predict_batch, sgd_step, train  # noqa: F401
from .checkpoint import load_checkpoint, save_checkpoint  # noqa: F401
from .gradcheck import gradient_check  # noqa: F401
