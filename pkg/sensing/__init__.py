from sensing.blocks import BlockGrid, assemble_blocks, split_blocks
from sensing.matrix import (BLOCK_DIM, BLOCK_SIZE, MeasurementMatrix, generate_matrix, load_matrix,
                            measurements_for_rate, quantize_matrix_8bit, save_matrix)
from sensing.measure import MeasurementSet, load_measurements, save_measurements, sense, sense_vectors
