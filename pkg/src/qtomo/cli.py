"""Command-line entry point: ``qtomo <command> ...``.

Every command computes all of its outputs before touching the output
directory, then writes them together with ``config.txt`` (the resolved
parameters, one ``key=value`` per line).

Exit codes: 0 success, 2 usage or config error, 3 I/O or format error,
4 numerical diagnostic.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys

import numpy as np

from . import grids, interp, qsim, radon, recon
from .errors import FormatError, NumericalDiagnostic
from .spectral import FORWARD, UNITARY, dft2d

logger = logging.getLogger("qtomo")

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _int_list(text: str):
    try:
        values = [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty size list")
    return values


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _config_text(args) -> str:
    skip = {"func", "out", "verbose"}
    items = sorted((k, v) for k, v in vars(args).items() if k not in skip)
    lines = []
    for k, v in items:
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        lines.append(f"{k}={v}")
    return "\n".join(lines) + "\n"


def _emit(args, files: dict) -> None:
    """Write ``{name: bytes}`` plus config.txt into ``args.out``."""
    os.makedirs(args.out, exist_ok=True)
    files = dict(files)
    files["config.txt"] = _config_text(args).encode()
    for name, payload in files.items():
        if isinstance(payload, str):
            payload = payload.encode()
        grids._write_atomic(os.path.join(args.out, name), payload)
    logger.info("wrote %s to %s", ", ".join(sorted(files)), args.out)


def _image_files(stem: str, img: grids.ImageGrid) -> dict:
    return {f"{stem}.rimg": grids.encode_rimg(img), f"{stem}.pgm": grids.encode_pgm16(img)}


def _load_image(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return grids.read_image(path)


def _load_sino(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return radon.read_sinogram(path)


# --- commands ------------------------------------------------------------------


def cmd_phantom(args):
    size = args.size_pos or args.size
    if size is None:
        raise UsageError("phantom needs a size")
    args.size, args.size_pos = size, None
    if args.kind == "shepp-logan":
        img = grids.shepp_logan(size)
    else:
        img = grids.disk_phantom(size, args.cx, args.cy, args.radius, args.value)
    _emit(args, _image_files("phantom", img))


def cmd_project(args):
    img = _load_image(args.image)
    n_rho = args.rho or img.n
    n_theta = args.angles or img.n
    args.rho, args.angles = n_rho, n_theta
    sino = radon.forward_radon(img, n_rho, n_theta)
    _emit(args, {"sinogram.rsin": radon.encode_rsin(sino)})


def cmd_reconstruct(args):
    sino = _load_sino(args.sinogram)
    reference = _load_image(args.reference) if args.reference else None
    n = args.size or sino.n_rho
    args.size = n
    report = recon.reconstruct(args.method, sino, n, args.scheme, args.ramp, reference)
    logger.info("%s took %.3f s", args.method, report.wall_time)
    files = _image_files("image", report.image)
    files["report.txt"] = "\n".join(report.as_lines()) + "\n"
    _emit(args, files)


def cmd_qreconstruct(args):
    sino = _load_sino(args.sinogram)
    n = args.size or sino.n_rho
    args.size = n
    result = qsim.run_ct_quantum_pipeline(
        sino,
        scheme=args.scheme,
        epsilon=args.epsilon,
        engine=args.engine,
        mode=args.mode,
        seed=args.seed,
        n=n,
    )
    logger.info("quantum pipeline took %.3f s", result.report.wall_time)
    files = _image_files("image", result.image)
    files["state.rvec"] = qsim.encode_rvec(result.state)
    files["report.txt"] = "\n".join(result.report.as_lines()) + "\n"
    _emit(args, files)


def cmd_mri_sim(args):
    img = _load_image(args.image)
    kspace = dft2d(img.data.astype(complex), FORWARD, UNITARY)
    encoded = qsim.encode_amplitudes(kspace, names=("ky", "kx"))
    state = qsim.mri_reconstruct_quantum(kspace)
    amps = state.amplitudes.reshape(img.n, img.n)
    recon_img = grids.ImageGrid(amps.real * state.scale)
    report = [
        f"n={img.n}",
        f"kspace_norm={state.scale!r}",
        f"max_abs_deviation={float(np.abs(amps - img.data / np.linalg.norm(img.data)).max())!r}",
    ]
    files = _image_files("image", recon_img)
    files["kspace.rvec"] = qsim.encode_rvec(encoded)
    files["report.txt"] = "\n".join(report) + "\n"
    _emit(args, files)


def cmd_bounds(args):
    sizes = args.sizes_pos or args.sizes
    scheme = args.scheme_pos or args.scheme
    args.sizes, args.sizes_pos = sizes, None
    args.scheme, args.scheme_pos = scheme, None
    rows = []
    for n in sizes:
        A = interp.build_interp_matrix(n, n, n, scheme)
        row_sum, col_sum, product = interp.schur_bound(A)
        sigma = interp.max_singular_value(A)
        rows.append([n, repr(row_sum), repr(col_sum), repr(product), repr(sigma * sigma)])
    text = _csv_text(["n", "max_row_sum", "max_col_sum", "schur_bound", "sigma_max_sq"], rows)
    _emit(args, {"bounds.csv": text})


def cmd_compare(args):
    a = _load_image(args.image_a)
    b = _load_image(args.image_b)
    row = [repr(recon.rmse(a, b)), repr(recon.psnr(a, b)), repr(recon.ncc(a, b))]
    _emit(args, {"metrics.csv": _csv_text(["rmse", "psnr", "ncc"], [row])})


def cmd_figs3(args):
    """Shepp-Logan phantom -> sinogram -> slice-theorem reconstruction (streak artifacts)."""
    phantom = grids.shepp_logan(args.size)
    sino = radon.forward_radon(phantom, args.size, args.angles)
    report = recon.reconstruct("fourier-slice", sino, args.size, args.scheme, False, phantom)
    files = _image_files("phantom", phantom)
    files.update(_image_files("recon", report.image))
    files["sinogram.rsin"] = radon.encode_rsin(sino)
    files["report.txt"] = "\n".join(report.as_lines()) + "\n"
    _emit(args, files)


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qtomo", description="Tomographic reconstruction, classical and simulated quantum.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    schemes = [s.value for s in interp.InterpolationScheme]

    s = sub.add_parser("phantom", help="rasterize a test phantom")
    s.add_argument("kind", choices=["shepp-logan", "disk"])
    s.add_argument("size_pos", nargs="?", type=int, metavar="size")
    s.add_argument("--size", type=int)
    s.add_argument("--radius", type=float, default=0.5)
    s.add_argument("--cx", type=float, default=0.0)
    s.add_argument("--cy", type=float, default=0.0)
    s.add_argument("--value", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_phantom)

    s = sub.add_parser("project", help="forward Radon transform of an image")
    s.add_argument("image")
    s.add_argument("--rho", type=int, help="radial samples (default: image side)")
    s.add_argument("--angles", type=int, help="angle count (default: image side)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("reconstruct", help="classical reconstruction")
    s.add_argument("method", choices=list(recon.METHODS))
    s.add_argument("sinogram")
    s.add_argument("--size", type=int)
    s.add_argument("--scheme", choices=schemes, default="bilinear")
    s.add_argument("--ramp", action="store_true", help="ramp-weight polar samples (fourier-slice only)")
    s.add_argument("--reference", help="image to report rmse/psnr/ncc against")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("qreconstruct", help="simulated quantum CT reconstruction")
    s.add_argument("sinogram")
    s.add_argument("--size", type=int)
    s.add_argument("--scheme", choices=schemes, default="bilinear")
    s.add_argument("--epsilon", type=float, default=1e-4)
    s.add_argument("--engine", choices=[qsim.EXACT, qsim.TAYLOR], default=qsim.EXACT)
    s.add_argument("--mode", choices=["postselect", "sample"], default="postselect")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_qreconstruct)

    s = sub.add_parser("mri-sim", help="synthesize k-space and reconstruct by inverse QFT")
    s.add_argument("image")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mri_sim)

    s = sub.add_parser("bounds", help="interpolation-matrix norm bounds as CSV")
    s.add_argument("sizes_pos", nargs="?", type=_int_list, metavar="sizes")
    s.add_argument("scheme_pos", nargs="?", choices=schemes, metavar="scheme")
    s.add_argument("--sizes", type=_int_list, default=[16, 32, 64])
    s.add_argument("--scheme", choices=schemes, default="bilinear")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("compare", help="rmse, psnr and ncc between two images")
    s.add_argument("image_a")
    s.add_argument("image_b")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("figs3", help="Shepp-Logan slice-theorem reconstruction recipe")
    s.add_argument("--size", type=int, default=128)
    s.add_argument("--angles", type=int, default=128)
    s.add_argument("--scheme", choices=schemes, default="bilinear")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_figs3)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"qtomo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"qtomo: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalDiagnostic as exc:
        print(f"qtomo: numerical diagnostic: {exc} {exc.detail if not isinstance(exc.detail, dict) else {k: v for k, v in exc.detail.items() if np.isscalar(v)}}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"qtomo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
