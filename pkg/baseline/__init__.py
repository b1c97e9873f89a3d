from baseline.ista import (DctBasis, IstaConfig, IstaResult, backproject, ista_recover, objective, recover_blocks,
                           soft_threshold)
