"""Full-factorial PSNR / timing sweeps over images, measurement rates, methods and noise levels."""
import csv
import logging
import os
import statistics
from collections import OrderedDict
from dataclasses import astuple, dataclass, fields
from typing import List

from evaluation.denoise import get_denoiser
from evaluation.metrics import image_psnr
from evaluation.pipeline import as_float_image, make_method, reconstruct_image
from reconnet.model import load_model
from sensing.matrix import BLOCK_DIM, generate_matrix, measurements_for_rate
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

REPORT_HEADER = ["image", "mr", "method", "noise_sigma", "psnr_intermediate_db", "psnr_denoised_db", "time_s",
                 "threads"]


@dataclass
class ReportRow:
    image: str
    mr: float
    method: str
    noise_sigma: float
    psnr_intermediate_db: float
    psnr_denoised_db: float
    time_s: float
    threads: int


@dataclass
class ExperimentReport:
    rows: List[ReportRow]

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(REPORT_HEADER)
            for row in self.rows:
                writer.writerow([row.image, "{:g}".format(row.mr), row.method, "{:g}".format(row.noise_sigma),
                                 "{:.6f}".format(row.psnr_intermediate_db), "{:.6f}".format(row.psnr_denoised_db),
                                 "{:.6f}".format(row.time_s), row.threads])


def read_report(path):
    casts = [f.type for f in fields(ReportRow)]
    rows = []
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != REPORT_HEADER:
            raise ValueError("{}: unexpected report header {}".format(path, header))
        for record in reader:
            rows.append(ReportRow(*[cast(value) for cast, value in zip(casts, record)]))
    return ExperimentReport(rows)


def summarize(report):
    """Mean PSNRs and time per (method, mr, noise_sigma), in first-seen order."""
    groups = OrderedDict()
    for row in report.rows:
        groups.setdefault((row.method, row.mr, row.noise_sigma), []).append(row)
    summary = []
    for (method, mr, sigma), rows in groups.items():
        summary.append({
            "method": method, "mr": mr, "noise_sigma": sigma, "count": len(rows),
            "psnr_intermediate_db": statistics.mean(r.psnr_intermediate_db for r in rows),
            "psnr_denoised_db": statistics.mean(r.psnr_denoised_db for r in rows),
            "time_s": statistics.mean(r.time_s for r in rows),
        })
    return summary


def format_summary(report):
    lines = ["{:<12} {:>6} {:>7} {:>6} {:>12} {:>12} {:>10}".format(
        "method", "mr", "sigma", "images", "psnr w/o dn", "psnr w/ dn", "time s")]
    for entry in summarize(report):
        lines.append("{:<12} {:>6g} {:>7g} {:>6d} {:>12.2f} {:>12.2f} {:>10.4f}".format(
            entry["method"], entry["mr"], entry["noise_sigma"], entry["count"], entry["psnr_intermediate_db"],
            entry["psnr_denoised_db"], entry["time_s"]))
    return "\n".join(lines)


def resolve_models(mrs, models):
    """Load every ReconNet model a sweep needs; raise once listing all missing rates."""
    resolved, missing = {}, []
    for mr in mrs:
        entry = models.get(mr) if models else None
        if isinstance(entry, str):
            if not os.path.isfile(entry):
                missing.append("{:g} ({})".format(mr, entry))
                continue
            entry = load_model(entry)
        if entry is None:
            missing.append("{:g}".format(mr))
            continue
        resolved[mr] = entry
    if missing:
        raise ConfigurationError("missing ReconNet models for measurement rate(s): {}".format(", ".join(missing)))
    return resolved


def run_benchmark(images, mrs, methods, noise_sigmas, repeats=1, matrices=None, models=None, ista_config=None,
                  denoiser="identity", seed=0, threads=1):
    """``images`` is a list of (image id, plane or ImageFile) pairs."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1, got {}".format(repeats))
    if not images:
        logger.warning("benchmark called with no images; the report holds the header only")
        return ExperimentReport([])
    models = resolve_models(mrs, models) if "reconnet" in methods else {}
    if isinstance(denoiser, str):
        denoiser = get_denoiser(denoiser)
    matrices = dict(matrices or {})
    for mr in mrs:
        if mr in matrices:
            if mr in models and models[mr].matrix_seed != matrices[mr].seed:
                raise ConfigurationError("model for mr {:g} was trained on matrix seed {}, given matrix has seed {}"
                                         .format(mr, models[mr].matrix_seed, matrices[mr].seed))
            continue
        if mr in models:
            logger.warning("mr %g: rebuilding the unquantized matrix from model seed %d; pass the matrix if the "
                           "model was trained on an 8-bit quantized one", mr, models[mr].matrix_seed)
            matrices[mr] = generate_matrix(models[mr].m, BLOCK_DIM, models[mr].matrix_seed)
        else:
            matrices[mr] = generate_matrix(measurements_for_rate(BLOCK_DIM, mr), BLOCK_DIM, seed)

    rows = []
    for image_id, image in images:
        for mr in mrs:
            phi = matrices[mr]
            for name in methods:
                method = make_method(name, phi, models.get(mr), ista_config, threads)
                for sigma in noise_sigmas:
                    times = []
                    result = None
                    for _ in range(repeats):
                        result = reconstruct_image(image, phi, method, sigma, denoiser, seed)
                        times.append(result.seconds)
                    reference = as_float_image(image)
                    row = ReportRow(image_id, mr, name, float(sigma), image_psnr(reference, result.intermediate),
                                    image_psnr(reference, result.denoised), statistics.median(times), threads)
                    logger.info("%s mr=%g %s sigma=%g: %.2f dB / %.2f dB, %.4f s", *astuple(row)[:7])
                    rows.append(row)
    return ExperimentReport(rows)
