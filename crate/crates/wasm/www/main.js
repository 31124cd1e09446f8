import init, { builtin_params, explore, stability_boundary, circle } from "./pkg/rkforge_wasm.js";

const NAMES = ["c2", "c4", "c5", "c6", "c7", "c8", "a65", "a75", "a76", "a86", "a87"];
const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"];

const $ = (id) => document.getElementById(id);

// Minimal line plot: series are arrays of [x, y] with NaN breaks.
function plot(canvas, series, { xr, yr, log = false, equal = false, axes = true } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  ctx.clearRect(0, 0, W, H);
  const ty = log ? (v) => Math.log10(Math.max(v, 1e-300)) : (v) => v;
  let [x0, x1] = xr, [y0, y1] = yr.map(ty);
  if (equal) {
    const sx = (x1 - x0) / (W - 2 * pad), sy = (y1 - y0) / (H - 2 * pad);
    const s = Math.max(sx, sy), cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
    x0 = cx - s * (W - 2 * pad) / 2; x1 = cx + s * (W - 2 * pad) / 2;
    y0 = cy - s * (H - 2 * pad) / 2; y1 = cy + s * (H - 2 * pad) / 2;
  }
  const px = (x) => pad + (x - x0) / (x1 - x0) * (W - 2 * pad);
  const py = (y) => H - pad - (ty(y) - y0) / (y1 - y0) * (H - 2 * pad);
  if (axes) {
    ctx.strokeStyle = "#999";
    ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
    ctx.fillStyle = "#444";
    ctx.font = "11px sans-serif";
    ctx.fillText(x0.toPrecision(3), pad, H - pad + 14);
    ctx.fillText(x1.toPrecision(3), W - pad - 30, H - pad + 14);
    const lab = (v) => (log ? "1e" + v.toFixed(1) : v.toPrecision(3));
    ctx.fillText(lab(y0), 2, H - pad);
    ctx.fillText(lab(y1), 2, pad + 4);
  }
  series.forEach(({ pts, color }) => {
    ctx.strokeStyle = color;
    ctx.beginPath();
    let pen = false;
    for (const [x, y] of pts) {
      if (Number.isNaN(x) || Number.isNaN(y)) { pen = false; continue; }
      pen ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y));
      pen = true;
    }
    ctx.stroke();
  });
  return { px, py };
}

function paramInputs() {
  const box = $("params");
  NAMES.forEach((n, k) => {
    const label = document.createElement("label");
    label.textContent = n;
    const input = document.createElement("input");
    input.type = "number";
    input.step = "any";
    input.id = "p" + k;
    input.addEventListener("change", refreshFamily);
    box.append(label, input);
  });
}

function currentParams() {
  return NAMES.map((_, k) => parseFloat($("p" + k).value));
}

function loadSeed() {
  builtin_params($("seed").value).forEach((v, k) => { $("p" + k).value = v.toPrecision(12); });
  refreshFamily();
}

function refreshFamily() {
  $("family-error").textContent = "";
  let view;
  try {
    view = explore(new Float64Array(currentParams()));
  } catch (e) {
    $("family-error").textContent = e.message ?? String(e);
    return;
  }
  const rows = [
    ["T5", view.t5], ["T6", view.t6], ["T7", view.t7],
    ["max T6(θ)", view.max_t6], ["V", view.variation], ["max|a|", view.max_abs_a],
  ];
  $("metrics").innerHTML = rows.map(([k, v]) => `<tr><td>${k}</td><td>${v.toExponential(4)}</td></tr>`).join("");

  const theta = view.theta, curve = view.t6_curve;
  const positive = Array.from(curve).filter((v) => v > 0);
  const lo = Math.min(...positive), hi = Math.max(...positive);
  plot($("t6"), [{ pts: Array.from(theta, (t, k) => [t, curve[k]]), color: "#1f77b4" }],
    { xr: [0, 1], yr: [lo, hi * 1.5], log: true });

  const w = view.weights, n = theta.length;
  const series = [];
  let ymin = 0, ymax = 0;
  for (let j = 0; j < w.length / n; j++) {
    const pts = Array.from(theta, (t, k) => [t, w[j * n + k]]);
    pts.forEach(([, y]) => { ymin = Math.min(ymin, y); ymax = Math.max(ymax, y); });
    series.push({ pts, color: COLORS[j % COLORS.length] });
  }
  plot($("beta"), series, { xr: [0, 1], yr: [ymin, ymax] });
  if ($("stab-pair").value === "custom") refreshStability();
}

function refreshStability() {
  const choice = $("stab-pair").value;
  const source = choice === "custom" ? currentParams().join(",") : choice;
  const equal = $("equal-cost").checked;
  const win = equal ? [-1.0, 0.25, -0.8, 0.8] : [-5.5, 1.0, -4.5, 4.5];
  let flat;
  try {
    flat = stability_boundary(source, equal, new Float64Array(win), 301);
  } catch (e) {
    $("family-error").textContent = e.message ?? String(e);
    return;
  }
  const pts = [];
  for (let k = 0; k < flat.length; k += 2) pts.push([flat[k], flat[k + 1]]);
  const { px, py } = plot($("stab"), [{ pts, color: "#d62728" }], { xr: [win[0], win[1]], yr: [win[2], win[3]], equal: true });
  const ctx = $("stab").getContext("2d");
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(px(win[0]), py(0)); ctx.lineTo(px(win[1]), py(0));
  ctx.moveTo(px(0), py(win[2])); ctx.lineTo(px(0), py(win[3]));
  ctx.stroke();
}

function refreshCircle() {
  const v = circle($("circle-pair").value);
  const ticks = (v.length - 1) / 5;
  const endpoint = v[v.length - 1];
  let worst = 0;
  for (let k = 0; k < ticks; k++) worst = Math.max(worst, Math.hypot(v[5 * k + 3], v[5 * k + 4]));
  const mag = 0.15 / Math.max(worst, endpoint, 1e-300);
  const arc = Array.from({ length: 101 }, (_, k) => {
    const a = (Math.PI / 2) * k / 100;
    return [Math.cos(a), Math.sin(a)];
  });
  const curve = [[1, 0]];
  for (let k = 0; k < ticks; k++) {
    const a = (Math.PI / 2) * v[5 * k];
    curve.push([Math.cos(a) + mag * v[5 * k + 3], Math.sin(a) + mag * v[5 * k + 4]]);
  }
  curve.push([0, 1]);
  const { px, py } = plot($("circle"), [
    { pts: arc, color: "#bbb" },
    { pts: curve, color: "#1f77b4" },
  ], { xr: [-0.1, 1.2], yr: [-0.1, 1.2], equal: true });
  const ctx = $("circle").getContext("2d");
  ctx.fillStyle = "#1f77b4";
  curve.slice(1, -1).forEach(([x, y]) => ctx.fillRect(px(x) - 2, py(y) - 2, 4, 4));
  $("circle-info").textContent =
    `endpoint error ${endpoint.toExponential(3)}, max interior error ${worst.toExponential(3)}, magnified ×${mag.toPrecision(2)}`;
}

await init();
paramInputs();
$("seed").addEventListener("change", loadSeed);
$("stab-pair").addEventListener("change", refreshStability);
$("equal-cost").addEventListener("change", refreshStability);
$("circle-pair").addEventListener("change", refreshCircle);
loadSeed();
refreshStability();
refreshCircle();
