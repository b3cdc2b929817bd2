"""Width-variational sweeps behind Figures 1-3.

Writes fig2.csv (n=0) and fig3.csv (n=5) through the CLI, so both carry the
usual config header, then fig1.csv with E* against eps for both states and
a short report of width jumps and eta-trend violations.

    python scripts/variational_figures.py --outdir out/ [--threads 4] [--points 60]
"""
import argparse
import csv
from pathlib import Path

from qnl.cli import main as qnl_main, read_artifact

ETAS = "0.1,0.2,0.5,0.9,0.999,0.999999"


def sweep_to(path: Path, n: int, points: int, threads: int) -> list[dict]:
    code = qnl_main(["variational", "--n", str(n), "--eta", ETAS, "--eps", f"0.01:20:log:{points}",
                     "--threads", str(threads), "--out", str(path)])
    if code != 0:
        raise SystemExit(f"sweep n={n} failed with exit code {code}")
    art = read_artifact(path.read_text())
    return [dict(zip(art.columns, r)) for r in art.rows]


def report(rows: list[dict], n: int) -> None:
    by_eta: dict[float, list[dict]] = {}
    for r in rows:
        by_eta.setdefault(float(r["eta"]), []).append(r)
    jumps = 0
    for eta, rs in sorted(by_eta.items()):
        rs.sort(key=lambda r: float(r["eps"]))
        for a, b in zip(rs, rs[1:]):
            if abs(float(b["c_star"]) - float(a["c_star"])) > 0.3:
                jumps += 1
                print(f"n={n} eta={eta}: c* jumps {float(a['c_star']):.3f} -> {float(b['c_star']):.3f} "
                      f"between eps {float(a['eps']):.4g} and {float(b['eps']):.4g}")
    by_eps: dict[float, list[dict]] = {}
    for r in rows:
        by_eps.setdefault(float(r["eps"]), []).append(r)
    rises = sum(
        1
        for rs in by_eps.values()
        for a, b in zip(sorted(rs, key=lambda r: float(r["eta"])), sorted(rs, key=lambda r: float(r["eta"]))[1:])
        if float(b["E_star"]) > float(a["E_star"])
    )
    print(f"n={n}: {jumps} width jumps > 0.3, {rises} (eps, eta->eta') pairs where E* rises with eta")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=Path, default=Path("out"))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--points", type=int, default=60, help="log-spaced eps samples in [0.01, 20]")
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    fig2 = sweep_to(args.outdir / "fig2.csv", 0, args.points, args.threads)
    fig3 = sweep_to(args.outdir / "fig3.csv", 5, args.points, args.threads)
    with open(args.outdir / "fig1.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "eta", "eps", "E_star"])
        for r in fig2 + fig3:
            w.writerow([r["n"], r["eta"], r["eps"], r["E_star"]])
    report(fig2, 0)
    report(fig3, 5)


if __name__ == "__main__":
    main()
