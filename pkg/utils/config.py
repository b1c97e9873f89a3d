from yacs.config import CfgNode as CN

_C = CN()

_C.SEED = 42
# worker cap for per-block work, 1 keeps baseline runs reproducible
_C.THREADS = 1

_C.SENSING = CN()
_C.SENSING.MEASUREMENT_RATE = 0.25
_C.SENSING.QUANTIZE_8BIT = False
# 8-bit pixel units
_C.SENSING.NOISE_SIGMA = 0.0

_C.DATASET = CN()
_C.DATASET.PATCH_SIZE = 33
_C.DATASET.STRIDE = 14
_C.DATASET.VAL_FRACTION = 0.1

_C.MODEL = CN()
_C.MODEL.CONV_INIT_STD = 0.01
_C.MODEL.FC_INIT_STD = 0.01
_C.MODEL.CONV_METHOD = "im2col"

_C.TRAIN = CN()
_C.TRAIN.BATCH_SIZE = 128
_C.TRAIN.LEARNING_RATE = 1e-3
_C.TRAIN.MOMENTUM = 0.9
_C.TRAIN.EPOCHS = 200
_C.TRAIN.CHECKPOINT_EVERY = 50
_C.TRAIN.REPRODUCIBLE = True
_C.TRAIN.LR_SEARCH = False
_C.TRAIN.LR_CANDIDATES = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1]
_C.TRAIN.PROBE_EPOCHS = 20

_C.ISTA = CN()
_C.ISTA.LAMBDA = 1e-4
_C.ISTA.CONTINUATION = True
_C.ISTA.MAX_ITERS = 2000
_C.ISTA.TOLERANCE = 1e-6
_C.ISTA.ACCELERATED = True
_C.ISTA.STEP = 1.0

_C.EVAL = CN()
_C.EVAL.DENOISER = "identity"
_C.EVAL.MEASUREMENT_RATES = [0.25, 0.10, 0.04, 0.01]
_C.EVAL.NOISE_SIGMAS = [0.0, 10.0, 20.0, 30.0]
_C.EVAL.METHODS = ["reconnet", "ista", "backproject"]
_C.EVAL.REPEATS = 3

CONFIG = _C


def get_cfg_defaults():
    """Fresh, mutable copy of the default configuration tree."""
    return _C.clone()


def load_config(path=None, opts=None):
    """Defaults, then an optional YAML file, then KEY VALUE override pairs."""
    cfg = get_cfg_defaults()
    if path:
        cfg.merge_from_file(path)
    if opts:
        cfg.merge_from_list(list(opts))
    return cfg
