from reconnet.model import (RECONNET_LAYERS, ReconNetModel, build_model, forward, infer_block, infer_blocks,
                            load_model, parameter_count, save_model)
from reconnet.train import (TrainConfig, TrainState, TrainingLog, evaluate, init_state, loss, loss_and_gradients,
                            lr_search, sgd_step, train)
