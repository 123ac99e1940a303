import init, { spectrum, poles, trajectory, singularities, PacketSim } from "./pkg/gawq_web.js";

const CLASSES = ["bound", "virtual", "resonant", "antiresonant", "growing", "decaying", "in-continuum"];
const CLASS_COLORS = ["#2c6fbb", "#888", "#8e44ad", "#16a085", "#c0392b", "#d35400", "#27ae60"];
const SITES = 1200;

const $ = (id) => document.getElementById(id);
const value = (id) => Number($(id).value);

function rows(flat, width) {
  const out = [];
  for (let i = 0; i < flat.length; i += width) out.push(flat.subarray(i, i + width));
  return out;
}

// Draws line or point series on a canvas with simple linear or log axes.
function plot(canvas, series, { logY = false, points = false, xLabel = "", yLabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const ty = (y) => (logY ? Math.log10(Math.max(y, 1e-300)) : y);
  let x0 = Infinity, x1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const s of series) {
    for (let i = 0; i < s.x.length; i++) {
      const y = ty(s.y[i]);
      if (!Number.isFinite(s.x[i]) || !Number.isFinite(y)) continue;
      x0 = Math.min(x0, s.x[i]); x1 = Math.max(x1, s.x[i]);
      y0 = Math.min(y0, y); y1 = Math.max(y1, y);
    }
  }
  if (!Number.isFinite(x0)) return;
  if (x1 === x0) { x0 -= 1; x1 += 1; }
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const mx = (x) => pad + ((x - x0) / (x1 - x0)) * (W - 2 * pad);
  const my = (y) => H - pad + ((y0 - y) / (y1 - y0)) * (H - 2 * pad);

  ctx.strokeStyle = "#999"; ctx.fillStyle = "#444"; ctx.font = "12px sans-serif";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  for (let i = 0; i <= 4; i++) {
    const fx = x0 + ((x1 - x0) * i) / 4, fy = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(fx.toPrecision(3), mx(fx) - 14, H - pad + 16);
    ctx.fillText(logY ? `1e${fy.toFixed(1)}` : fy.toPrecision(3), 4, my(fy) + 4);
  }
  ctx.fillText(xLabel, W / 2, H - 8);
  ctx.fillText(yLabel, 4, pad - 12);

  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    ctx.beginPath();
    let pen = false;
    for (let i = 0; i < s.x.length; i++) {
      const y = ty(s.y[i]);
      if (!Number.isFinite(y)) { pen = false; continue; }
      const px = mx(s.x[i]), py = my(y);
      if (points || s.points) { ctx.fillRect(px - s.size / 2, py - s.size / 2, s.size, s.size); continue; }
      pen ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
      pen = true;
    }
    ctx.stroke();
  }
}

function guarded(f) {
  try { f(); $("status").textContent = ""; } catch (e) { $("status").textContent = String(e.message ?? e); }
}

function drawSpectrum() {
  const r = rows(spectrum(value("n"), value("g"), value("gamma"), 1500), 4);
  const w = r.map((x) => x[0]);
  plot($("spectrum"), [
    { x: w, y: r.map((x) => x[1]), color: "#c0392b" },
    { x: w, y: r.map((x) => x[2]), color: "#2c6fbb" },
    { x: w, y: r.map((x) => x[3]), color: "#27ae60" },
  ], { logY: $("logy").checked, xLabel: "ω_k / J" });
}

let trajCache = { key: "", data: [] };

function drawPoles() {
  const n = value("n"), g = value("g"), gamma = value("gamma");
  const key = `${n}:${g}`;
  if (trajCache.key !== key) trajCache = { key, data: rows(trajectory(n, g, -0.5, 0.5, 101), 6) };
  const now = rows(poles(n, g, gamma), 5);
  const series = [{ x: trajCache.data.map((r) => r[3]), y: trajCache.data.map((r) => r[4]), color: "#bbb", points: true, size: 2 }];
  for (const p of now) series.push({ x: [p[2]], y: [p[3]], color: CLASS_COLORS[p[4]], points: true, size: 9 });
  plot($("poles"), series, { xLabel: "Re E / J", yLabel: "Im E / J" });
  $("pole-table").tBodies[0].innerHTML = now
    .map((p) => `<tr><td style="color:${CLASS_COLORS[p[4]]}">${CLASSES[p[4]]}</td>${[0, 1, 2, 3].map((i) => `<td>${p[i].toFixed(6)}</td>`).join("")}</tr>`)
    .join("") || "<tr><td colspan=5>no poles</td></tr>";
}

let sim = null, playing = false;

function resetPacket() {
  sim?.free();
  sim = new PacketSim(value("n"), value("g"), value("gamma"), value("kc"), value("alpha"), SITES);
  drawPacket();
}

function drawPacket() {
  const d = sim.density(), j0 = sim.j_min();
  const x = Array.from(d, (_, i) => j0 + i);
  plot($("packet"), [{ x, y: d, color: "#2c6fbb" }], { logY: true, xLabel: "site j", yLabel: "|φ(j)|²" });
  const [t, r, tr, a, norm] = sim.observables();
  $("obs").textContent = `Jt = ${t.toFixed(1)}   R_L = ${r.toFixed(4)}   T_L = ${tr.toFixed(4)}   |φ(a)|² = ${a.toExponential(2)}   norm = ${norm.toExponential(4)}`;
}

function tick() {
  if (!playing) return;
  guarded(() => { sim.advance(4); drawPacket(); });
  requestAnimationFrame(tick);
}

function syncLabels() {
  for (const id of ["n", "g", "gamma", "kc", "alpha"]) $(`${id}-v`).textContent = $(id).value;
}

function redraw() {
  syncLabels();
  guarded(() => { drawSpectrum(); drawPoles(); });
}

await init();
// N and g also rebuild the gain trajectory, so they redraw on release.
for (const id of ["n", "g"]) {
  $(id).addEventListener("input", syncLabels);
  $(id).addEventListener("change", () => { redraw(); guarded(resetPacket); });
}
$("gamma").addEventListener("input", () => { redraw(); guarded(resetPacket); });
for (const id of ["kc", "alpha"]) $(id).addEventListener("input", () => { syncLabels(); guarded(resetPacket); });
$("logy").addEventListener("change", redraw);
$("critical").addEventListener("click", () => guarded(() => {
  const s = rows(singularities(value("n"), value("g")), 3).filter((r) => r[1] > 0 && r[1] <= 0.5);
  if (!s.length) throw new Error("no spectral singularity with 0 < γ ≤ 0.5");
  $("gamma").value = s[0][1];
  $("kc").value = s[0][0];
  redraw();
  resetPacket();
}));
$("reset").addEventListener("click", () => guarded(resetPacket));
$("play").addEventListener("click", () => {
  playing = !playing;
  $("play").textContent = playing ? "pause" : "run";
  tick();
});
redraw();
guarded(resetPacket);
