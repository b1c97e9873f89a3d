from evaluation.benchmark import (ExperimentReport, ReportRow, format_summary, read_report, run_benchmark,
                                  summarize)
from evaluation.denoise import DenoiserPlugin, external_denoiser, get_denoiser
from evaluation.metrics import PSNR_CAP, estimate_sigma, image_psnr, psnr
from evaluation.pipeline import (RecoveryMethod, ReconstructionResult, as_float_image, backproject_method,
                                 ista_method, make_method, reconnet_method, reconstruct_image,
                                 reconstruct_measurements)
