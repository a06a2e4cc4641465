import init, { curves, route_histogram, timeline } from "./pkg/spconv_wasm.js";

const $ = (id) => document.getElementById(id);
const colors = { heralded: "#1f77b4", clocked: "#d62728", passive: "#2ca02c" };

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

function guarded(outId, fn) {
  try {
    fn();
  } catch (e) {
    show(outId, String(e), true);
  }
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
}

function drawCurves() {
  const eta = Number($("c-eta").value);
  $("c-eta-v").textContent = eta.toFixed(2);
  const data = JSON.parse(curves(Number($("c-nmax").value), eta));
  const cv = $("c-plot");
  const ctx = cv.getContext("2d");
  const pad = 45;
  axes(ctx, cv.width, cv.height, pad);
  const nMax = data.heralded.points.length;
  // log scale down to 1e-6
  const lo = -6;
  const x = (n) => pad + ((n - 1) / Math.max(nMax - 1, 1)) * (cv.width - 1.5 * pad);
  const y = (s) => {
    const l = Math.max(Math.log10(Math.max(s, 1e-300)), lo);
    return pad / 2 + (l / lo) * (cv.height - 1.5 * pad);
  };
  for (let e = 0; e >= lo; e--) {
    ctx.fillText(`1e${e}`, 4, y(10 ** e) + 4);
  }
  for (let n = 1; n <= nMax; n++) ctx.fillText(String(n), x(n) - 3, cv.height - pad + 16);
  for (const key of ["heralded", "clocked", "passive"]) {
    ctx.strokeStyle = colors[key];
    ctx.fillStyle = colors[key];
    ctx.beginPath();
    data[key].points.forEach(([n, s], i) => (i ? ctx.lineTo(x(n), y(s)) : ctx.moveTo(x(n), y(s))));
    ctx.stroke();
    for (const [n, s] of data[key].points) ctx.fillRect(x(n) - 2, y(s) - 2, 4, 4);
  }
  const legend = Object.entries(colors).map(([k]) => k);
  legend.forEach((k, i) => {
    ctx.fillStyle = colors[k];
    ctx.fillText(k, cv.width - 90, 20 + 15 * i);
  });
  const at2 = (k) => data[k].points.find(([n]) => n === 2)?.[1];
  show("c-out", `n = 2: heralded ${at2("heralded")}, clocked ${at2("clocked")}, passive ${at2("passive")}`);
}

function drawRouting() {
  const s = JSON.parse(
    route_histogram(
      $("r-strategy").value,
      Number($("r-n").value),
      Number($("r-eta").value),
      Number($("r-trials").value),
      Number($("r-seed").value),
    ),
  );
  const cv = $("r-plot");
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  // photon (row) x port (column) heat map
  const n = s.n_modes;
  const cell = Math.min((cv.height - 40) / n, 60);
  ctx.font = "12px sans-serif";
  for (let i = 0; i < n; i++) {
    for (let k = 0; k < n; k++) {
      const f = s.fractions[i][k];
      ctx.fillStyle = `rgba(31, 119, 180, ${f})`;
      ctx.fillRect(60 + k * cell, 20 + i * cell, cell - 2, cell - 2);
      ctx.fillStyle = f > 0.5 ? "#fff" : "#222";
      ctx.fillText(f.toFixed(3), 64 + k * cell, 20 + i * cell + cell / 2);
    }
    ctx.fillStyle = "#444";
    ctx.fillText(`photon ${i}`, 2, 20 + i * cell + cell / 2);
  }
  for (let k = 0; k < n; k++) ctx.fillText(`port ${k}`, 60 + k * cell, 14);
  const z = s.std_error > 0 ? (s.success_frequency - s.closed_form) / s.std_error : 0;
  show(
    "r-out",
    `success ${s.success_frequency.toFixed(6)} ± ${s.std_error.toFixed(6)}, closed form ${s.closed_form.toFixed(6)} (z = ${z.toFixed(2)})`,
  );
}

function drawTimeline() {
  const shown = 300;
  const t = JSON.parse(
    timeline(
      Number($("t-pair").value),
      Number($("t-eff").value),
      Number($("t-dead").value),
      Number($("t-n").value),
      20000,
      Number($("t-seed").value),
    ),
  );
  const cv = $("t-plot");
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const w = (cv.width - 90) / shown;
  const rows = [
    ["signal", t.signal, "#999"],
    ["herald A", t.herald_a, colors.heralded],
    ["herald B", t.herald_b, colors.clocked],
  ];
  ctx.font = "12px sans-serif";
  rows.forEach(([label, slots, color], r) => {
    ctx.fillStyle = "#444";
    ctx.fillText(label, 2, 40 + r * 50);
    ctx.fillStyle = color;
    for (const s of slots) if (s < shown) ctx.fillRect(80 + s * w, 25 + r * 50, Math.max(w - 1, 1), 22);
  });
  ctx.fillStyle = "#444";
  ctx.fillText("trigger", 2, 190);
  ctx.strokeStyle = colors.passive;
  for (const s of t.triggers) {
    if (s < shown) ctx.strokeRect(80 + s * w, 175, t.run_length * w - 1, 22);
  }
  show(
    "t-out",
    `first ${shown} of ${t.slots} slots; herald fraction ${t.herald_fraction.toFixed(4)} ` +
      `(stationary ${t.herald_fraction_expected.toFixed(4)}), ${t.triggers.length} triggers`,
  );
}

await init();
$("c-eta").addEventListener("input", () => guarded("c-out", drawCurves));
$("c-nmax").addEventListener("change", () => guarded("c-out", drawCurves));
$("r-run").addEventListener("click", () => guarded("r-out", drawRouting));
$("t-run").addEventListener("click", () => guarded("t-out", drawTimeline));
guarded("c-out", drawCurves);
guarded("r-out", drawRouting);
guarded("t-out", drawTimeline);
