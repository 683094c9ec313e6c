"""CSV emission: header row, comma-separated, 17 significant digits."""

import os


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path: str, header: list[str], rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_text(path: str, lines: list[str]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def forward_files(out_dir: str, result: dict) -> list[str]:
    sol_path = os.path.join(out_dir, "solution.csv")
    write_csv(sol_path, ["node", "value"],
              zip(result["nodes"], result["solution"]))
    dn_path = os.path.join(out_dir, "dn.csv")
    write_csv(dn_path, ["x_k", "value", "source_f_id"],
              ((x, v, result["dn_source"]) for x, v in
               zip(result["dn_points"], result["dn_values"])))
    return [sol_path, dn_path]


def recover_files(out_dir: str, result: dict) -> list[str]:
    rec_path = os.path.join(out_dir, "recovery.csv")
    write_csv(rec_path, ["cell_center", "b_hat", "q_hat", "b_true", "q_true"],
              zip(result["cell_centers_b"], result["b_hat"], result["q_hat"],
                  result["b_true"], result["q_true"]))
    log_path = os.path.join(out_dir, "run_log.txt")
    write_text(log_path, result["log_lines"])
    paths = [rec_path, log_path]
    if result.get("b_unrecoverable") is not None:
        diag_path = os.path.join(out_dir, "diagnosis.csv")
        write_csv(diag_path, ["cell_center", "b_unrecoverable", "q_unrecoverable"],
                  zip(result["cell_centers_b"], result["b_unrecoverable"],
                      result["q_unrecoverable"]))
        paths.append(diag_path)
    return paths


def runge_files(out_dir: str, result: dict) -> list[str]:
    paths = []
    for curve in result["curves"]:
        path = os.path.join(out_dir, f"runge_{curve['demo']}.csv")
        write_csv(path, ["basis_size", "achieved_error"],
                  zip(curve["basis_sizes"], curve["errors"]))
        paths.append(path)
    return paths


def verify_files(out_dir: str, result: dict) -> list[str]:
    path = os.path.join(out_dir, "verify.csv")
    write_csv(path, ["check", "value", "tol", "passed"],
              ((c["name"], c["value"], c["tol"], c["passed"]) for c in result["checks"]))
    return [path]
