"""Command line: ``illumopt <subcommand>``.

Settings resolve as built-in defaults < ``--config`` file < command-line
flags. A config file holds optional sections ``dataset``, ``recon``, ``learn``
and ``benchmark`` plus top-level ``k``, ``seed`` and ``threads``; optical
system keys and ``leds`` may also sit at the top level. Every run writes a
``manifest.json`` that is itself a valid ``--config``, so a run can be
repeated from its manifest alone.
"""

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import effective_threads
from .baselines import (
    design_annular,
    design_qdpc,
    design_random,
    initial_design,
    load_external_design,
)
from .dataset import (
    DatasetConfig,
    build_dataset,
    l2_error,
    load_dataset,
    make_led_layout,
    psnr_db,
    save_dataset,
)
from .exceptions import ConfigurationError, IllumoptError, NumericalError, SchemaError
from .gradcheck import DEFAULT_TOL, run_gradcheck
from .io import load_array, read_json, save_array, write_json
from .learn import DesignMatrix, LearnConfig, forward, pbld_train
from .optics import (
    build_ideal_pupil,
    fft2,
    flatten_measurement,
    ifft2,
    optics_from_config,
    wotf_bank,
)
from .recon import ReconConfig, apgd_recover

logger = logging.getLogger("illumopt")

SECTIONS = ("dataset", "recon", "learn", "benchmark")
TOP_LEVEL = ("k", "seed", "threads")
OPTICS_KEYS = ("wavelength_um", "camera_pixel_um", "magnification", "na_objective", "grid_h",
               "grid_w", "leds")
BUILTIN_DESIGNS = ("qdpc", "annular", "random")


# ----------------------------------------------------------------------------- config


def default_config(preset="desk"):
    dataset = DatasetConfig.full_scale() if preset == "full" else DatasetConfig()
    return {
        "dataset": dataset.to_dict(),
        "recon": ReconConfig().to_dict(),
        "learn": LearnConfig().to_dict(),
        "benchmark": {"designs": list(BUILTIN_DESIGNS), "ring_fraction": 0.8, "random_seed": 0},
        "k": 4,
        "seed": None,
        "threads": None,
    }


def load_config_file(path):
    """Read a config or a run manifest and return the config mapping."""
    d = read_json(path)
    if not isinstance(d, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    if "command" in d and "config" in d:
        d = d["config"]
    d = dict(d)
    optics = {k: d.pop(k) for k in OPTICS_KEYS if k in d}
    if optics:
        d.setdefault("dataset", {})
        d["dataset"] = {**d["dataset"], **optics}
    unknown = set(d) - set(SECTIONS) - set(TOP_LEVEL) - {"inputs"}
    if unknown:
        raise ConfigurationError(f"{path}: unknown config keys {sorted(unknown)}")
    for name in SECTIONS:
        if name in d and not isinstance(d[name], dict):
            raise ConfigurationError(f"{path}: section {name!r} must be an object")
    return d


def resolve_config(args):
    """Merge defaults, the ``--config`` file and command-line flags."""
    cfg = default_config(getattr(args, "preset", None) or "desk")
    inputs = {}
    if getattr(args, "config", None):
        loaded = load_config_file(args.config)
        for name in SECTIONS:
            cfg[name].update(loaded.get(name, {}))
        for key in TOP_LEVEL:
            if key in loaded:
                cfg[key] = loaded[key]
        inputs = loaded.get("inputs", {})
    for key in TOP_LEVEL:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    # fail early on bad keys or values
    DatasetConfig.from_dict(cfg["dataset"])
    ReconConfig.from_dict(cfg["recon"])
    LearnConfig.from_dict(cfg["learn"])
    return cfg, inputs


def _recon_config(cfg):
    return ReconConfig.from_dict(cfg["recon"])


# ----------------------------------------------------------------------------- manifest


@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: dict
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    code_version: str = __version__
    wall_time_s: float = 0.0

    def write(self, out_dir):
        d = asdict(self)
        d["config"] = {**self.config, "inputs": self.inputs}
        return write_json(Path(out_dir) / "manifest.json", d)


def _out_dir(args, default):
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _rel(paths, out):
    return sorted(str(Path(p).relative_to(out)) for p in paths)


# ----------------------------------------------------------------------------- commands


def cmd_gen_dataset(args):
    cfg, _ = resolve_config(args)
    if cfg["seed"] is not None:
        cfg["dataset"]["seed"] = int(cfg["seed"])
    out = _out_dir(args, "dataset")
    start = time.perf_counter()
    dconf = DatasetConfig.from_dict(cfg["dataset"])
    dataset = build_dataset(dconf, effective_threads(cfg["threads"]))
    save_dataset(dataset, out)
    outputs = [p for p in out.iterdir() if p.name != "manifest.json"]
    RunManifest("gen-dataset", cfg, {"dataset": dconf.seed}, {}, _rel(outputs, out),
                wall_time_s=time.perf_counter() - start).write(out)
    print(f"wrote {len(dataset.pairs)} pairs ({len(dataset.train)} train / {len(dataset.test)} test) to {out}")
    return 0


def _dataset_path(args, inputs):
    path = getattr(args, "dataset", None) or inputs.get("dataset")
    if not path:
        raise ConfigurationError("no dataset directory given")
    return Path(path)


def _bank(dataset):
    return wotf_bank(dataset.leds, build_ideal_pupil(dataset.system), dataset.system)


def write_loss_csv(path, losses):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["update_index", "mean_batch_loss"])
        for t, value in enumerate(losses):
            w.writerow([t, repr(float(value))])


def cmd_train(args):
    cfg, inputs = resolve_config(args)
    if cfg["seed"] is not None:
        cfg["learn"]["rng_seed"] = int(cfg["seed"])
    data_path = _dataset_path(args, inputs)
    start = time.perf_counter()
    dataset = load_dataset(data_path)
    out = _out_dir(args, "train")
    H = _bank(dataset)
    recon = _recon_config(cfg)
    learn = LearnConfig.from_dict(cfg["learn"])
    K = int(cfg["k"])
    C0 = initial_design(dataset.leds, K)
    outputs = [C0.save(out / "initial_design.json")]
    ckpt_dir = out / "checkpoints"

    def checkpoint(t, C, _loss):
        every = learn.checkpoint_every
        if every and (t + 1) % every == 0:
            path = ckpt_dir / f"design_{t + 1:04d}.json"
            DesignMatrix(C, C0.masks).save(path)
            outputs.append(path)

    threads = effective_threads(cfg["threads"])
    result = pbld_train(dataset.split("train"), C0, H, recon, learn, n_threads=threads,
                        callback=checkpoint)
    outputs.append(result.design.save(out / "design.json"))
    write_loss_csv(out / "loss.csv", result.loss_history)
    with open(out / "timing.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["update_index", "wall_time_s"])
        for t, value in enumerate(result.wall_times):
            w.writerow([t, f"{value:.6f}"])
    outputs += [out / "loss.csv", out / "timing.csv"]
    RunManifest("train", cfg, {"learn": learn.rng_seed}, {"dataset": str(data_path)},
                _rel(outputs, out), wall_time_s=time.perf_counter() - start).write(out)
    final = result.loss_history[-1] if result.loss_history else float("nan")
    print(f"trained K={K} design for {learn.n_updates} updates on {len(dataset.train)} pairs; "
          f"final mean batch loss {final:.6g}; wrote {out / 'design.json'}")
    return 0


def write_png(path, image):
    """8-bit grayscale, min-max scaled; returns ``(min, max)`` of the input."""
    from PIL import Image

    lo, hi = float(np.min(image)), float(np.max(image))
    if hi > lo:
        scaled = np.round((image - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(image)
    Image.fromarray(scaled.astype(np.uint8), mode="L").save(path, format="PNG")
    return lo, hi


def _parse_design_arg(text):
    name, sep, path = text.partition("=")
    if not sep:
        return None, text
    return name, path


def _measurement_spectra(path, K, shape):
    array, meta = load_array(path)
    if array.shape != (K,) + tuple(shape):
        raise SchemaError(f"{path}: expected measurements of shape {(K,) + tuple(shape)}, got {array.shape}")
    if meta["domain"] == "fourier":
        return array.astype(complex)
    return np.stack([fft2(flatten_measurement(img)) for img in array])


def cmd_reconstruct(args):
    cfg, inputs = resolve_config(args)
    if not args.design:
        raise ConfigurationError("reconstruct needs --design")
    start = time.perf_counter()
    recon = _recon_config(cfg)
    truth = None
    if args.measurements:
        dconf = DatasetConfig.from_dict(cfg["dataset"])
        system, leds = optics_from_config({k: v for k, v in dconf.to_dict().items() if k in OPTICS_KEYS})
        leds = leds or make_led_layout(dconf.n_leds, system.na_objective)
        source = {"measurements": str(args.measurements)}
    else:
        data_path = _dataset_path(args, inputs)
        dataset = load_dataset(data_path)
        system, leds = dataset.system, dataset.leds
        indices = dataset.train if args.split == "train" else dataset.test
        if not 0 <= args.pair < len(indices):
            raise ConfigurationError(f"pair {args.pair} out of range for the {args.split} split ({len(indices)} pairs)")
        pair = dataset.pairs[indices[args.pair]]
        truth = pair.phase
        source = {"dataset": str(data_path), "split": args.split, "pair": args.pair}

    _, design_path = _parse_design_arg(args.design)
    named = load_external_design(design_path, n_leds=len(leds))
    C = named.design.weights
    H = wotf_bank(leds, build_ideal_pupil(system), system)
    K = C.shape[1]
    hk = (H @ C).T.reshape((K,) + system.shape)
    if args.measurements:
        yk = _measurement_spectra(args.measurements, K, system.shape)
    else:
        yk = (pair.Y @ C).T.reshape((K,) + system.shape)
    estimate, _ = apgd_recover(yk, hk, recon)
    out = _out_dir(args, "reconstruct")
    phase = estimate.image

    outputs = list(save_array(out / "phase", phase, "spatial"))
    lo, hi = write_png(out / "phase.png", phase)
    (out / "phase_png_range.txt").write_text(f"min_rad {lo!r}\nmax_rad {hi!r}\n")
    outputs += [out / "phase.png", out / "phase_png_range.txt"]
    report = {"design": str(design_path), "K": K, "n_iters": recon.n_iters, "shape": list(phase.shape),
              "phase_min_rad": lo, "phase_max_rad": hi, **source}
    if truth is not None:
        report["psnr_db"] = psnr_db(phase, truth)
        report["l2_error"] = l2_error(phase, truth)
    outputs.append(write_json(out / "report.json", report))
    RunManifest("reconstruct", cfg, {}, {**source, "design": str(design_path)}, _rel(outputs, out),
                wall_time_s=time.perf_counter() - start).write(out)
    msg = f"reconstructed {phase.shape[0]}x{phase.shape[1]} phase with K={K}"
    if "psnr_db" in report:
        msg += f"; PSNR {report['psnr_db']:.2f} dB"
    print(msg)
    return 0


def benchmark_designs(cfg, dataset, external):
    """Built-in baselines named in the config plus external design files."""
    K = int(cfg["k"])
    bench = cfg["benchmark"]
    designs = []
    for name in bench.get("designs", BUILTIN_DESIGNS):
        if name == "qdpc":
            designs.append(design_qdpc(dataset.leds, K))
        elif name == "annular":
            designs.append(design_annular(dataset.leds, K, dataset.system.na_objective,
                                          bench.get("ring_fraction", 0.8)))
        elif name == "random":
            seed = cfg["seed"] if cfg["seed"] is not None else bench.get("random_seed", 0)
            designs.append(design_random(dataset.leds, K, int(seed)))
        else:
            raise ConfigurationError(f"unknown built-in design {name!r}; use one of {BUILTIN_DESIGNS}")
    for text in external:
        name, path = _parse_design_arg(text)
        named = load_external_design(path, n_leds=len(dataset.leds), name=name or Path(path).stem)
        if named.design.K != K:
            raise ConfigurationError(f"{path} has K={named.design.K} but the benchmark uses K={K}")
        designs.append(named)
    names = [d.name for d in designs]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"design names must be unique, got {names}")
    return designs


def evaluate_designs(dataset, designs, recon, n_threads=1):
    """PSNR/l2 rows for every (design, split, pair), in a fixed order."""
    H = _bank(dataset)
    jobs = [(named, split, i, dataset.pairs[idx])
            for named in designs
            for split in ("train", "test")
            for i, idx in enumerate(getattr(dataset, split))]

    def run(job):
        named, split, i, pair = job
        phi_hat, _ = forward(named.design.weights, pair.Y, H, pair.phase.shape, recon)
        phase = ifft2(phi_hat).real
        return {"design": named.name, "split": split, "pair_index": i,
                "psnr_db": psnr_db(phase, pair.phase), "l2_error": l2_error(phase, pair.phase)}

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def summarize(rows):
    """``{design: {split: (mean, std, n)}}`` with population std (0 for one pair)."""
    out = {}
    for row in rows:
        out.setdefault(row["design"], {}).setdefault(row["split"], []).append(row["psnr_db"])
    return {d: {s: (float(np.mean(v)), float(np.std(v)), len(v)) for s, v in splits.items()}
            for d, splits in out.items()}


def format_summary(summary, K):
    lines = [f"PSNR (dB), mean ± std, K = {K}", f"{'design':<20}{'train':>18}{'test':>18}"]
    for design, splits in summary.items():
        cells = []
        for split in ("train", "test"):
            if split in splits:
                mean, std, _ = splits[split]
                cells.append(f"{mean:.2f} ± {std:.2f}")
            else:
                cells.append("-")
        lines.append(f"{design:<20}{cells[0]:>18}{cells[1]:>18}")
    return "\n".join(lines) + "\n"


def plot_summary(path, summary, K):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(summary)
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(1.6 * len(names) + 2, 3.5))
    for offset, split in ((-0.2, "train"), (0.2, "test")):
        means = [summary[n].get(split, (np.nan, 0, 0))[0] for n in names]
        stds = [summary[n].get(split, (0, 0, 0))[1] for n in names]
        ax.bar(x + offset, means, 0.4, yerr=stds, capsize=3, label=split)
    ax.set_xticks(x, names)
    ax.set_ylabel("PSNR (dB)")
    ax.set_title(f"K = {K}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def cmd_benchmark(args):
    cfg, inputs = resolve_config(args)
    data_path = _dataset_path(args, inputs)
    start = time.perf_counter()
    dataset = load_dataset(data_path)
    out = _out_dir(args, "benchmark")
    external = list(args.design or inputs.get("designs", []))
    designs = benchmark_designs(cfg, dataset, external)
    rows = evaluate_designs(dataset, designs, _recon_config(cfg), effective_threads(cfg["threads"]))
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, ["design", "split", "pair_index", "psnr_db", "l2_error"], lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({**row, "psnr_db": repr(row["psnr_db"]), "l2_error": repr(row["l2_error"])})
    summary = summarize(rows)
    K = int(cfg["k"])
    text = format_summary(summary, K)
    (out / "summary.txt").write_text(text)
    write_json(out / "summary.json", {d: {s: {"mean_db": m, "std_db": sd, "n": n} for s, (m, sd, n) in v.items()}
                                      for d, v in summary.items()})
    plot_summary(out / "psnr_bar.png", summary, K)
    outputs = [out / f for f in ("results.csv", "summary.txt", "summary.json", "psnr_bar.png")]
    seeds = {"random": cfg["seed"] if cfg["seed"] is not None else cfg["benchmark"].get("random_seed", 0)}
    RunManifest("benchmark", cfg, seeds, {"dataset": str(data_path), "designs": external},
                _rel(outputs, out), wall_time_s=time.perf_counter() - start).write(out)
    print(text, end="")
    return 0


def cmd_gradcheck(args):
    corrupt = (lambda G: G * (1.0 + 1e-3)) if args.corrupt_gradient else None
    seed = args.seed if args.seed is not None else 0
    start = time.perf_counter()
    results = run_gradcheck(args.instances, seed, args.tol, corrupt=corrupt, acceleration=args.acceleration)
    header = f"{'#':>3} {'grid':>6} {'S':>2} {'K':>2} {'N':>3} {'tau':>6} {'max rel err':>12} {'excl':>4}  result"
    print(header)
    for r in results:
        print(f"{r.index:>3} {r.shape[0]:>3}x{r.shape[1]:<2} {r.S:>2} {r.K:>2} {r.n_iters:>3} {r.tau:>6.0e} "
              f"{r.max_rel_error:>12.3e} {r.n_excluded:>4}  {'pass' if r.passed else 'FAIL'}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} instances within {args.tol:g} "
          f"({time.perf_counter() - start:.1f} s)")
    if args.out:
        out = _out_dir(args, "gradcheck")
        with open(out / "gradcheck.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, list(results[0].row()), lineterminator="\n")
            w.writeheader()
            for r in results:
                w.writerow(r.row())
        cfg = {"instances": args.instances, "tol": args.tol, "acceleration": args.acceleration}
        RunManifest("gradcheck", cfg, {"gradcheck": seed}, {}, ["gradcheck.csv"],
                    wall_time_s=time.perf_counter() - start).write(out)
    if failed:
        raise NumericalError(f"{failed} gradient-check instance(s) exceeded {args.tol:g}")
    return 0


def _use_color():
    return not os.environ.get("ILLUMOPT_NO_COLOR")


def render_design(weights, masks, leds, cells=13, color=True):
    """Text map of each measurement's LED weights on the illumination-NA grid.

    Weights are shown as digits 0-9 relative to the column maximum, ``.`` is
    a masked LED and ``o`` an allowed LED left at zero.
    """
    pos = leds.as_array()
    radius = max(np.abs(pos).max(), 1e-12)
    col = np.rint((pos[:, 0] / radius + 1) / 2 * (cells - 1)).astype(int)
    # +na_y is drawn upward
    row = np.rint((1 - pos[:, 1] / radius) / 2 * (cells - 1)).astype(int)
    panels = []
    for k in range(weights.shape[1]):
        grid = [["  "] * cells for _ in range(cells)]
        top = weights[:, k].max()
        for s in range(len(pos)):
            w = weights[s, k]
            if masks[s, k]:
                glyph = " ."
            elif w == 0:
                glyph = " o"
            else:
                level = int(np.clip(np.floor(w / top * 9.999), 0, 9)) if top > 0 else 0
                glyph = f" {level}"
                if color:
                    shade = 238 + int(round(level / 9 * 17))
                    glyph = f"\x1b[38;5;{shade}m{glyph}\x1b[0m"
            grid[row[s]][col[s]] = glyph
        panels.append([f"measurement {k + 1}".ljust(2 * cells)] + ["".join(r) for r in grid])
    return "\n".join("   ".join(parts) for parts in zip(*panels)) + "\n"


def cmd_show_design(args):
    if not args.design:
        raise ConfigurationError("show-design needs --design")
    _, path = _parse_design_arg(args.design)
    named = load_external_design(path)
    cfg, inputs = resolve_config(args)
    if getattr(args, "dataset", None):
        leds = load_dataset(args.dataset).leds
    else:
        dconf = DatasetConfig.from_dict(cfg["dataset"])
        leds = dconf.led_array() if dconf.leds is not None else make_led_layout(named.design.S, dconf.na_objective)
    if len(leds) != named.design.S:
        raise SchemaError(f"design has S={named.design.S} LEDs, the LED layout has {len(leds)}")
    print(render_design(named.design.weights, named.design.masks, leds, color=_use_color()), end="")
    return 0


# ----------------------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(prog="illumopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, threads=True):
        p.add_argument("--config", metavar="PATH", help="JSON config or a previous run's manifest.json")
        p.add_argument("--out", metavar="DIR", help="output directory")
        if seed:
            p.add_argument("--seed", type=int, metavar="INT")
        if threads:
            p.add_argument("--threads", type=int, metavar="INT",
                           help="worker threads (default: all cores; results do not depend on it)")

    p = sub.add_parser("gen-dataset", help="simulate a dataset of phase targets and single-LED measurements")
    common(p)
    p.add_argument("--preset", choices=("desk", "full"), help="base dataset size: desk 64x64, 37 LEDs, 40/10 pairs (default); full 95x95, 69 LEDs, 90/10")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="learn a K-measurement illumination design")
    common(p)
    p.add_argument("dataset", nargs="?", help="dataset directory")
    p.add_argument("--k", type=int, choices=(2, 3, 4), metavar="INT", help="number of measurements")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", help="recover phase from one dataset pair or a measurement file")
    common(p, seed=False, threads=False)
    p.add_argument("dataset", nargs="?", help="dataset directory")
    p.add_argument("--design", metavar="PATH", help="design JSON")
    p.add_argument("--pair", type=int, default=0, help="pair index within the split")
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--measurements", metavar="STEM",
                   help="(K, H, W) array: raw intensities (spatial) or flattened-image spectra (fourier)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("benchmark", help="PSNR of several designs on both splits")
    common(p)
    p.add_argument("dataset", nargs="?", help="dataset directory")
    p.add_argument("--k", type=int, choices=(2, 3, 4), metavar="INT")
    p.add_argument("--design", action="append", metavar="[NAME=]PATH", help="extra design JSON (repeatable)")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference design gradients")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--seed", type=int, metavar="INT")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--acceleration", choices=("fista-momentum", "as-written"), default="fista-momentum")
    # test hook: perturbs the analytic gradient so the check must fail
    p.add_argument("--corrupt-gradient", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("show-design", help="print a design as a text map of the LED grid")
    p.add_argument("--design", metavar="PATH")
    p.add_argument("--config", metavar="PATH", help="config giving the LED layout")
    p.add_argument("--dataset", metavar="DIR", help="take the LED layout from a dataset")
    p.set_defaults(func=cmd_show_design)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for numerical failures
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IllumoptError as exc:
        print(f"illumopt {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"illumopt {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"illumopt {args.command}: numerical error: {exc}", file=sys.stderr)
        return 2
