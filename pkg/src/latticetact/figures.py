"""Data-first figure emitters: every figure is a CSV plus a small SVG."""

from __future__ import annotations

import csv

import numpy as np

from .estimator import weighted_sums
from .svg import PALETTE, Axes, Canvas, limits


def characterization_curves(data):
    """Per (axial, radial, force, channel): mean and std across trials."""
    rows = []
    for a in np.unique(data.axial):
        for r in np.unique(data.radial):
            sel = (data.axial == a) & (data.radial == r)
            forces = np.unique(data.force[sel])
            for f in forces:
                p = data.pressures[sel & (data.force == f)]
                rows.append((int(a), int(r), float(f), p.mean(axis=0), p.std(axis=0)))
    return rows


def write_characterization(csv_path, svg_path, data, radials=(0, 1)):
    rows = characterization_curves(data)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["axial", "radial", "force_N"] + [f"mean_p{i}" for i in range(1, 8)]
                   + [f"std_p{i}" for i in range(1, 8)])
        for a, r, f, mean, std in rows:
            w.writerow([a, r, f"{f:.4f}"] + [f"{v:.6f}" for v in mean] + [f"{v:.6f}" for v in std])

    axials = sorted({row[0] for row in rows})
    radials = [r for r in radials if any(row[1] == r for row in rows)]
    pw, ph, m = 170, 130, 50
    canvas = Canvas(m + len(axials) * (pw + m), m + len(radials) * (ph + m))
    ylim = limits(*[row[3] for row in rows])
    for i, r in enumerate(radials):
        for j, a in enumerate(axials):
            sub = [row for row in rows if row[0] == a and row[1] == r]
            f = np.array([row[2] for row in sub])
            mean = np.array([row[3] for row in sub])
            std = np.array([row[4] for row in sub])
            ax = Axes(canvas, m + j * (pw + m), m + i * (ph + m), pw, ph, limits(f), ylim,
                      title=f"axial {a}, radial {r}", xlabel="force (N)", ylabel="p (Pa)" if j == 0 else "")
            for ch in range(7):
                ax.band(f, mean[:, ch] - std[:, ch], mean[:, ch] + std[:, ch], PALETTE[ch])
                ax.plot(f, mean[:, ch], PALETTE[ch])
    canvas.save(svg_path)


def write_calibration(csv_path, svg_path, pressures, displacements, cal):
    w = np.column_stack(weighted_sums(pressures))
    d = np.asarray(displacements) * np.array([1.0, 1.0, -1.0])
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["dx_mm", "dy_mm", "dz_mm", "wx_Pa", "wy_Pa", "wz_Pa"])
        for disp, ws in zip(displacements, w):
            out.writerow([f"{v:.6f}" for v in (*disp, *ws)])
    canvas = Canvas(3 * 230 + 50, 260)
    for i, (axis, alpha) in enumerate(zip("xyz", cal.alphas)):
        excited = np.abs(d[:, i]) > 0
        ax = Axes(canvas, 60 + i * 230, 30, 170, 180, limits(w[excited, i]), limits(d[excited, i]),
                  title=f"{axis}: alpha={alpha:.4g} mm/Pa", xlabel=f"w{axis} (Pa)",
                  ylabel="displacement (mm)" if i == 0 else "")
        ax.scatter(w[excited, i], d[excited, i], PALETTE[i])
        xs = np.array(limits(w[excited, i]))
        ax.plot(xs, alpha * xs, "black", width=1.0)
    canvas.save(svg_path)


def write_force_scatter(csv_path, svg_path, data, pred_force, pred_axial, pred_radial):
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["axial", "radial", "force_N", "pred_force_N", "pred_axial", "pred_radial"])
        for row in zip(data.axial, data.radial, data.force, pred_force, pred_axial, pred_radial):
            w.writerow([int(row[0]), int(row[1]), f"{row[2]:.4f}", f"{row[3]:.6f}", int(row[4]), int(row[5])])
    canvas = Canvas(320, 300)
    lim = limits(data.force, pred_force)
    ax = Axes(canvas, 60, 30, 230, 220, lim, lim, title="predicted vs true force",
              xlabel="true force (N)", ylabel="predicted (N)")
    for a in np.unique(data.axial):
        sel = data.axial == a
        ax.scatter(data.force[sel], pred_force[sel], PALETTE[int(a)], r=1.2)
    ax.plot(np.array(lim), np.array(lim), "black", width=0.8)
    canvas.save(svg_path)


def write_stiffness_plot(svg_path, results):
    canvas = Canvas(3 * 230 + 50, 260)
    for i, res in enumerate(results):
        ax = Axes(canvas, 60 + i * 230, 30, 170, 180, (0, res.displacements.max()), (0, res.forces.max()),
                  title=f"{res.axis}: k={res.k:.4g} N/mm", xlabel="x (mm)", ylabel="F (N)" if i == 0 else "")
        ax.scatter(res.displacements, res.forces, PALETTE[i], r=2.5, opacity=1.0)
        xs = np.array([0.0, res.displacements.max()])
        ax.plot(xs, res.k * xs, "black")
    canvas.save(svg_path)


def write_run_plot(svg_path, times, states):
    u = np.array([s.u for s in states])
    f = np.array([s.force for s in states])
    canvas = Canvas(560, 420)
    ax = Axes(canvas, 60, 30, 460, 150, limits(times), limits(f), title="applied force", ylabel="N")
    for i in range(3):
        ax.plot(times, f[:, i], PALETTE[i])
    ax = Axes(canvas, 60, 230, 460, 150, limits(times), limits(u), title="arm command",
              xlabel="t (s)", ylabel="mm")
    for i in range(3):
        ax.plot(times, u[:, i], PALETTE[i])
    canvas.save(svg_path)


def write_fatigue_plot(svg_path, report):
    canvas = Canvas(360, 320)
    cycles = report.cycles
    if not cycles:
        canvas.text(180, 160, "no retained cycles")
        canvas.save(svg_path)
        return
    step = max(1, len(cycles) // 400)
    xs = [c.disp for c in cycles[::step]]
    ys = [c.force for c in cycles[::step]]
    ax = Axes(canvas, 60, 30, 270, 240, limits(*xs), limits(*ys), title="force-displacement cycles",
              xlabel="displacement (mm)", ylabel="force (N)")
    for x, y in zip(xs, ys):
        ax.plot(x, y, "#bbbbbb", width=0.6, opacity=0.5)
    for k, ordinal in enumerate(report.highlighted()):
        c = cycles[ordinal - 1]
        ax.plot(c.disp, c.force, PALETTE[k % len(PALETTE)], width=1.4)
    canvas.save(svg_path)
