import init, { smooth_indicator, concentration, lower_bound } from "./pkg/hdclt_wasm.js";

const num = (id) => Number(document.getElementById(id).value);

function plot(canvas, xs, series, yRange) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, w, h);
  const [x0, x1] = [xs[0], xs[xs.length - 1]];
  const [y0, y1] = yRange;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.fillText(y1.toFixed(2), 2, pad + 4);
  ctx.fillText(y0.toFixed(2), 2, h - pad);
  ctx.fillText(x0.toFixed(2), pad, h - 10);
  ctx.fillText(x1.toFixed(2), w - pad - 24, h - 10);
  for (const { ys, color } of series) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
  }
}

function drawIndicator() {
  const eps = num("si-eps");
  const m = 301;
  const v = smooth_indicator(num("si-lo"), num("si-hi"), eps, m);
  const xs = v.slice(0, m);
  const dh = Array.from(v.slice(2 * m, 3 * m), (y) => y * eps);
  const smax = v.slice(3 * m);
  const top = Math.max(1.2, ...smax);
  plot(document.getElementById("si-canvas"), xs, [
    { ys: v.slice(m, 2 * m), color: "#1f77b4" },
    { ys: dh, color: "#d62728" },
    { ys: smax, color: "#2ca02c" },
  ], [Math.min(-1, ...dh), top]);
}

function drawConcentration() {
  const k = 10;
  const v = concentration(num("ac-d"), num("ac-a"), num("ac-reps"), 7, k);
  const eps = v.slice(0, k);
  const naz = v.slice(3 * k, 4 * k);
  const fac = v.slice(4 * k);
  const top = Math.min(1, Math.max(...fac, ...v.slice(k, 2 * k)) * 1.3);
  plot(document.getElementById("ac-canvas"), eps, [
    { ys: v.slice(k, 2 * k), color: "#1f77b4" },
    { ys: fac, color: "#2ca02c" },
    { ys: Array.from(naz, (y) => Math.min(y, top)), color: "#d62728" },
  ], [0, top]);
}

function runLowerBound() {
  const out = document.getElementById("lb-out");
  try {
    const ns = new Uint32Array([100, 250, 500, 1000]);
    const v = lower_bound(ns, num("lb-gamma"), num("lb-c"), num("lb-reps"), 11);
    const lines = ["     n       d      gap       se   predicted"];
    for (let i = 0; i < v.length; i += 5) {
      lines.push(`${String(v[i]).padStart(6)}  ${String(v[i + 1]).padStart(6)}  ${v[i + 2].toFixed(4).padStart(7)}  ${v[i + 3].toFixed(4)}  ${v[i + 4].toFixed(4).padStart(9)}`);
    }
    out.textContent = lines.join("\n");
  } catch (e) {
    out.textContent = String(e);
  }
}

await init();
document.getElementById("si-run").onclick = drawIndicator;
document.getElementById("ac-run").onclick = drawConcentration;
document.getElementById("lb-run").onclick = runLowerBound;
drawIndicator();
