"""Command-line front end: genphi -> train -> reconstruct -> bench, plus sense and convert."""
import argparse
import glob
import logging
import math
import os
import sys
import time

import torch

from baseline.ista import IstaConfig
from dataset.netpbm import convert_image, load_image, luminance, save_image
from dataset.patches import build_dataset, extract_patches, load_planes, read_manifest, save_dataset
from evaluation.benchmark import format_summary, run_benchmark
from evaluation.metrics import image_psnr
from evaluation.pipeline import as_float_image, make_method, reconstruct_image, reconstruct_measurements
from reconnet.model import load_model, save_model
from reconnet.train import TrainConfig, TrainingLog, evaluate, train
from sensing.blocks import split_blocks
from sensing.matrix import (BLOCK_DIM, generate_matrix, load_matrix, measurements_for_rate, quantize_matrix_8bit,
                            save_matrix)
from sensing.measure import load_measurements, save_measurements, sense
from utils.config import load_config
from utils.errors import ConfigurationError, FormatError, ReconNetError
from utils.util import setup_logging

logger = logging.getLogger("main")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _floats(text):
    return [float(item) for item in text.split(",") if item.strip()]


def _words(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="reconnet",
                                     description="Block compressive sensing with ReconNet and classical baselines.")
    parser.add_argument("--config", default=None, help="YAML file overriding the default configuration")
    parser.add_argument("--seed", default=None, type=int, help="seed for every random draw")
    parser.add_argument("--threads", default=None, type=int, help="worker cap for per-block work")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genphi", help="generate a measurement matrix (PHIM file)")
    p.add_argument("--mr", required=True, type=float, help="measurement rate in (0, 1]")
    p.add_argument("--quantize8", action="store_true", help="8-bit quantize the matrix")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sense", help="simulate block camera acquisition to an MSET file")
    p.add_argument("--input", required=True, help="PGM/PPM image (luminance is sensed)")
    p.add_argument("--phi", required=True)
    p.add_argument("--noise-sigma", default=None, type=float, help="measurement noise, 8-bit pixel units")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a ReconNet on a manifest of images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--epochs", default=None, type=int)
    lr = p.add_mutually_exclusive_group()
    lr.add_argument("--lr", default=None, type=float, help="fixed learning rate")
    lr.add_argument("--lr-search", action="store_true", help="pick the rate by linear search over a decade grid")
    p.add_argument("--val-frac", default=None, type=float)
    p.add_argument("--batch-size", default=None, type=int)
    p.add_argument("--checkpoint-dir", default=None)
    p.add_argument("--log", default=None, help="training log CSV (default: <out>.log.csv)")
    p.add_argument("--dataset-cache", default=None, help="also write the training set as a DSET file")
    p.add_argument("--out", required=True)

    p = sub.add_parser("reconstruct", help="reconstruct an image from (simulated) block measurements")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="PGM/PPM image to sense and reconstruct")
    source.add_argument("--measurements", help="MSET file of stored measurements")
    p.add_argument("--phi", required=True)
    p.add_argument("--model", default=None, help="RNET model (method reconnet)")
    p.add_argument("--method", default=None, choices=["reconnet", "ista", "backproject"])
    p.add_argument("--noise-sigma", default=None, type=float)
    p.add_argument("--denoiser", default=None)
    p.add_argument("--reference", default=None, help="ground-truth image for PSNR")
    p.add_argument("--out", required=True, help="output prefix; writes <out>_intermediate and <out>_denoised")

    p = sub.add_parser("bench", help="PSNR / timing sweep over images, rates, methods and noise levels")
    p.add_argument("--images", required=True, help="glob of PGM/PPM test images")
    p.add_argument("--mrs", default=None, type=_floats)
    p.add_argument("--methods", default=None, type=_words)
    p.add_argument("--sigmas", default=None, type=_floats)
    p.add_argument("--repeats", default=None, type=int)
    p.add_argument("--models", default=None, help="model path pattern with {mr}, e.g. models/reconnet_{mr}.rnet")
    p.add_argument("--phis", default=None, help="optional matrix path pattern with {mr}")
    p.add_argument("--denoiser", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("convert", help="convert any Pillow-readable image to PGM/PPM")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    return parser


def resolve_config(args):
    cfg = load_config(args.config)
    overrides = []
    if args.seed is not None:
        overrides += ["SEED", args.seed]
    if args.threads is not None:
        overrides += ["THREADS", args.threads]
    flag_keys = {
        "mr": "SENSING.MEASUREMENT_RATE", "quantize8": "SENSING.QUANTIZE_8BIT", "noise_sigma": "SENSING.NOISE_SIGMA",
        "epochs": "TRAIN.EPOCHS", "lr": "TRAIN.LEARNING_RATE", "lr_search": "TRAIN.LR_SEARCH",
        "batch_size": "TRAIN.BATCH_SIZE", "val_frac": "DATASET.VAL_FRACTION", "denoiser": "EVAL.DENOISER",
        "mrs": "EVAL.MEASUREMENT_RATES", "methods": "EVAL.METHODS", "sigmas": "EVAL.NOISE_SIGMAS",
        "repeats": "EVAL.REPEATS",
    }
    for name, key in flag_keys.items():
        value = getattr(args, name, None)
        if value is None or value is False:
            continue
        overrides += [key, value]
    cfg.merge_from_list(overrides)
    # seeds are stored as u64 in PHIM, RNET and MSET headers
    if not 0 <= cfg.SEED < 2 ** 64:
        raise ValueError("seed must lie in [0, 2^64), got {}".format(cfg.SEED))
    cfg.freeze()
    return cfg


def print_resolved(cfg, args):
    print("command: {}".format(args.command))
    for name, value in sorted(vars(args).items()):
        if name not in ("command", "config", "seed", "threads", "verbose"):
            print("  --{}: {}".format(name.replace("_", "-"), value))
    print(cfg.dump())


def cmd_genphi(cfg, args):
    mr = cfg.SENSING.MEASUREMENT_RATE
    m = measurements_for_rate(BLOCK_DIM, mr)
    phi = generate_matrix(m, BLOCK_DIM, cfg.SEED)
    residual = phi.orthonormality_residual()
    if cfg.SENSING.QUANTIZE_8BIT:
        phi = quantize_matrix_8bit(phi)
    save_matrix(phi, args.out)
    print("m = {}, n = {}, orthonormality residual = {:.3e}{}".format(
        phi.m, phi.n, residual, ", 8-bit quantized" if phi.quantized else ""))
    return EXIT_OK


def cmd_sense(cfg, args):
    phi = load_matrix(args.phi)
    plane = luminance(load_image(args.input))
    measurements = sense(phi, split_blocks(plane), cfg.SENSING.NOISE_SIGMA, cfg.SEED)
    save_measurements(measurements, args.out)
    print("{} blocks x {} measurements written to {}".format(len(measurements), measurements.m, args.out))
    return EXIT_OK


def _train_config(cfg):
    return TrainConfig(batch_size=cfg.TRAIN.BATCH_SIZE, learning_rate=cfg.TRAIN.LEARNING_RATE,
                       momentum=cfg.TRAIN.MOMENTUM, epochs=cfg.TRAIN.EPOCHS, seed=cfg.SEED,
                       checkpoint_every=cfg.TRAIN.CHECKPOINT_EVERY, reproducible=cfg.TRAIN.REPRODUCIBLE,
                       conv_method=cfg.MODEL.CONV_METHOD, conv_init_std=cfg.MODEL.CONV_INIT_STD,
                       fc_init_std=cfg.MODEL.FC_INIT_STD, lr_search=cfg.TRAIN.LR_SEARCH,
                       lr_candidates=tuple(cfg.TRAIN.LR_CANDIDATES), probe_epochs=cfg.TRAIN.PROBE_EPOCHS)


def cmd_train(cfg, args):
    paths = read_manifest(args.manifest)
    if not paths:
        raise ConfigurationError("manifest {} lists no images".format(args.manifest))
    phi = load_matrix(args.phi)
    patches = extract_patches(load_planes(paths), cfg.DATASET.PATCH_SIZE, cfg.DATASET.STRIDE)
    if len(patches) == 0:
        raise ConfigurationError("no {0}x{0} patches could be extracted from {1}".format(
            cfg.DATASET.PATCH_SIZE, args.manifest))
    train_set, val_set = build_dataset(patches, phi, cfg.DATASET.VAL_FRACTION, cfg.SEED)
    if args.dataset_cache:
        save_dataset(train_set, args.dataset_cache)
    if args.checkpoint_dir:
        os.makedirs(args.checkpoint_dir, exist_ok=True)

    config = _train_config(cfg)
    log = TrainingLog()
    start = time.time()
    model = train(train_set, val_set, phi, config, args.checkpoint_dir, log)
    interval = time.time() - start
    final_loss = evaluate(model, train_set, method=config.conv_method)
    save_model(model, args.out)
    log.write_csv(args.log or args.out + ".log.csv")
    print("Training took %d minutes %.3f seconds" % (interval // 60, interval % 60))
    print("kept {} init, final train loss {:.6f}, model written to {}".format(model.init_mode, final_loss, args.out))
    if not math.isfinite(final_loss):
        logger.error("final training loss is not finite")
        return EXIT_RUNTIME
    return EXIT_OK


def _ista_config(cfg):
    return IstaConfig(lam=cfg.ISTA.LAMBDA, max_iters=cfg.ISTA.MAX_ITERS, tolerance=cfg.ISTA.TOLERANCE,
                      accelerated=cfg.ISTA.ACCELERATED, step=cfg.ISTA.STEP,
                      continuation=cfg.ISTA.CONTINUATION).validate()


def _output_path(prefix, suffix, channels):
    return "{}_{}.{}".format(prefix, suffix, "pgm" if channels == 1 else "ppm")


def cmd_reconstruct(cfg, args):
    phi = load_matrix(args.phi)
    name = args.method or ("reconnet" if args.model else None)
    if name is None:
        raise ConfigurationError("give --model or --method")
    model = None
    if name == "reconnet":
        if not args.model:
            raise ConfigurationError("method reconnet needs --model")
        if not os.path.isfile(args.model):
            raise FileNotFoundError("model file not found: {}".format(args.model))
        model = load_model(args.model)
    ista = _ista_config(cfg)
    method = make_method(name, phi, model, ista, cfg.THREADS, cfg.MODEL.CONV_METHOD)

    if args.input:
        image = load_image(args.input)
        result = reconstruct_image(image, phi, method, cfg.SENSING.NOISE_SIGMA, cfg.EVAL.DENOISER, cfg.SEED)
        channels = image.channels
    else:
        result = reconstruct_measurements([load_measurements(args.measurements)], phi, method, cfg.EVAL.DENOISER)
        channels = 1
    save_image(_output_path(args.out, "intermediate", channels), result.intermediate)
    save_image(_output_path(args.out, "denoised", channels), result.denoised)
    print("reconstruction took {:.4f} s, sigma estimate {}".format(
        result.seconds, ", ".join("{:.3f}".format(s) for s in result.sigma_estimates)))
    if args.reference:
        reference = as_float_image(load_image(args.reference))
        print("PSNR intermediate: {:.2f} dB".format(image_psnr(reference, result.intermediate)))
        print("PSNR denoised: {:.2f} dB".format(image_psnr(reference, result.denoised)))
    return EXIT_OK


def cmd_bench(cfg, args):
    paths = sorted(glob.glob(args.images))
    if not paths:
        logger.warning("no images match %s", args.images)
    images = [(os.path.splitext(os.path.basename(path))[0], load_image(path)) for path in paths]
    mrs = list(cfg.EVAL.MEASUREMENT_RATES)
    if images and "reconnet" in cfg.EVAL.METHODS and not args.phis:
        # RNET files do not record whether the training matrix was 8-bit quantized
        raise ConfigurationError("bench with method reconnet needs --phis, the matrices the models were trained on")
    models = {mr: args.models.format(mr="{:g}".format(mr)) for mr in mrs} if args.models else None
    matrices = {mr: load_matrix(args.phis.format(mr="{:g}".format(mr))) for mr in mrs} if args.phis else None
    ista = _ista_config(cfg)
    report = run_benchmark(images, mrs, list(cfg.EVAL.METHODS), list(cfg.EVAL.NOISE_SIGMAS), cfg.EVAL.REPEATS,
                           matrices, models, ista, cfg.EVAL.DENOISER, cfg.SEED, cfg.THREADS)
    report.write_csv(args.out)
    print(format_summary(report))
    return EXIT_OK


def cmd_convert(cfg, args):
    image = convert_image(args.input, args.out)
    print("{}x{}, {} channel(s) -> {}".format(image.width, image.height, image.channels, args.out))
    return EXIT_OK


COMMANDS = {
    "genphi": cmd_genphi,
    "sense": cmd_sense,
    "train": cmd_train,
    "reconstruct": cmd_reconstruct,
    "bench": cmd_bench,
    "convert": cmd_convert,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        cfg = resolve_config(args)
    except (OSError, ValueError, KeyError) as err:
        print("error: invalid configuration: {}".format(err), file=sys.stderr)
        return EXIT_USAGE
    print_resolved(cfg, args)
    torch.set_num_threads(max(1, cfg.THREADS))
    try:
        return COMMANDS[args.command](cfg, args)
    except (ConfigurationError, FormatError, FileNotFoundError) as err:
        print("error: {}".format(err), file=sys.stderr)
        return EXIT_USAGE
    except (ReconNetError, OSError) as err:
        print("error: {}".format(err), file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as err:
        print("error: {}".format(err), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
