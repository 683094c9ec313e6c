"""Command-line driver: a thin client of the fraclab service.

Subcommands forward | recover | runge | verify run against an in-process
service instance by default, or a remote one via --server.  The client
writes the CSV artifacts; exit codes: 0 success, 1 verification/guard
failure, 2 configuration error, 3 recovery divergence.
"""

import argparse
import json
import sys

import httpx

from . import csvio
from .errors import ConfigError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # environment shim noise from the test client import
        from fastapi.testclient import TestClient

    from .service.app import app
    return TestClient(app)


def _request_body(args) -> dict:
    body: dict = {}
    if args.preset:
        body["preset"] = args.preset
    if args.config:
        with open(args.config) as fh:
            body["config_text"] = fh.read()
    if args.seed is not None:
        body["seed"] = args.seed
    if getattr(args, "debug_corrupt_constant", False):
        body["config_text"] = (body.get("config_text", "")
                               + "\n[verify]\ncorrupt_constant = true\n")
    return body


def _post(client: httpx.Client, path: str, body: dict):
    resp = client.post(path, json=body)
    if resp.status_code == 200:
        return resp.json(), EXIT_OK
    try:
        detail = resp.json().get("detail")
    except json.JSONDecodeError:
        detail = None
    if isinstance(detail, dict):
        code = detail.get("code", "domain")
        message = detail.get("message", "")
    else:
        code, message = "config", str(detail)
    print(f"error ({code}): {message}", file=sys.stderr)
    if code == "config":
        return None, EXIT_CONFIG
    if code == "divergence":
        return None, EXIT_DIVERGED
    return None, EXIT_FAIL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fraclab",
        description="1-D nonlocal operator laboratory (thin client over the service)")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI configuration file")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=None, metavar="N")
    common.add_argument("--preset", metavar="NAME", default="paper-desk")
    common.add_argument("--server", metavar="URL", default=None,
                        help="remote service URL (default: in-process)")
    sub.add_parser("forward", parents=[common], help="solve the exterior-value problem")
    sub.add_parser("recover", parents=[common], help="recover the coefficients")
    sub.add_parser("runge", parents=[common], help="run the density demonstrations")
    p_verify = sub.add_parser("verify", parents=[common], help="run the verification suite")
    p_verify.add_argument("--debug-corrupt-constant", action="store_true",
                          help="fault injection: double the kernel constant")
    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)

    if args.command == "serve":
        try:
            import uvicorn
        except ImportError:
            print("the 'serve' command needs uvicorn (pip install fraclab[serve])",
                  file=sys.stderr)
            return EXIT_CONFIG
        from .service.app import app
        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    body = _request_body(args)
    with _client(args.server) as client:
        result, code = _post(client, f"/{args.command}", body)
    if result is None:
        return code

    if args.command == "forward":
        paths = csvio.forward_files(args.out, {
            "nodes": result["nodes"], "solution": result["solution"],
            "dn_points": result["dn"]["points"], "dn_values": result["dn"]["values"],
            "dn_source": result["dn"]["source"]})
        if result.get("benchmark_rel_l2_error") is not None:
            print(f"benchmark rel L2 error: {result['benchmark_rel_l2_error']:.6g}")
        print("wrote " + ", ".join(paths))
        return EXIT_OK
    if args.command == "recover":
        paths = csvio.recover_files(args.out, result)
        print(f"b rel error {result['rel_error_b']:.3e}, "
              f"q rel error {result['rel_error_q']:.3e}, "
              f"converged={result['converged']}")
        print("wrote " + ", ".join(paths))
        return EXIT_OK
    if args.command == "runge":
        paths = csvio.runge_files(args.out, result)
        for curve in result["curves"]:
            errs = ", ".join(f"{e:.4g}" for e in curve["errors"])
            print(f"{curve['demo']}: sizes {curve['basis_sizes']} errors [{errs}]")
        print("wrote " + ", ".join(paths))
        return EXIT_OK
    if args.command == "verify":
        paths = csvio.verify_files(args.out, result)
        for c in result["checks"]:
            status = "pass" if c["passed"] else "FAIL"
            print(f"[{status}] {c['name']}: {c['value']:.3e} (tol {c['tol']:g})")
        print("wrote " + ", ".join(paths))
        return EXIT_OK if result["all_passed"] else EXIT_FAIL
    raise ConfigError(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
