import init, { denoise_demo, secular_curve, laplacian_spectrum } from "./pkg/mod1_web.js";

const COLORS = { clean: "#222", noisy: "#bbb", qcqp: "#d62728", iqcqp: "#1f77b4", ols: "#2ca02c", bound: "#ff7f0e" };

function readForm(form) {
  const out = {};
  for (const el of form.elements) {
    if (el.name) out[el.name] = Number(el.value);
  }
  return out;
}

function extent(arrays) {
  let lo = Infinity;
  let hi = -Infinity;
  for (const a of arrays) {
    for (const v of a) {
      if (Number.isFinite(v)) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
  }
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  return [lo, hi];
}

// series: [{ x, y, color, dots }]
function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  const h = canvas.height;
  const pad = { l: 50, r: 10, t: 10, b: 24 };
  ctx.clearRect(0, 0, w, h);
  const [x0, x1] = opts.xRange ?? extent(series.map((s) => s.x));
  const [y0, y1] = opts.yRange ?? extent(series.map((s) => s.y));
  const sx = (v) => pad.l + ((v - x0) / (x1 - x0)) * (w - pad.l - pad.r);
  const sy = (v) => h - pad.b - ((v - y0) / (y1 - y0)) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad.l, pad.t, w - pad.l - pad.r, h - pad.t - pad.b);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  for (let i = 0; i <= 4; i++) {
    const yv = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(yv.toPrecision(3), 4, sy(yv) + 4);
    const xv = x0 + ((x1 - x0) * i) / 4;
    ctx.fillText(xv.toPrecision(3), sx(xv) - 10, h - 6);
  }

  ctx.save();
  ctx.beginPath();
  ctx.rect(pad.l, pad.t, w - pad.l - pad.r, h - pad.t - pad.b);
  ctx.clip();
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    if (s.dots) {
      for (let i = 0; i < s.x.length; i++) ctx.fillRect(sx(s.x[i]) - 1, sy(s.y[i]) - 1, 2, 2);
      continue;
    }
    ctx.lineWidth = s.width ?? 1.5;
    ctx.beginPath();
    let pen = false;
    for (let i = 0; i < s.x.length; i++) {
      if (!Number.isFinite(s.y[i])) {
        pen = false;
        continue;
      }
      pen ? ctx.lineTo(sx(s.x[i]), sy(s.y[i])) : ctx.moveTo(sx(s.x[i]), sy(s.y[i]));
      pen = true;
    }
    ctx.stroke();
  }
  for (const v of opts.vlines ?? []) {
    ctx.strokeStyle = v.color;
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(sx(v.at), pad.t);
    ctx.lineTo(sx(v.at), h - pad.b);
    ctx.stroke();
  }
  for (const v of opts.hlines ?? []) {
    ctx.strokeStyle = v.color;
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(pad.l, sy(v.at));
    ctx.lineTo(w - pad.r, sy(v.at));
    ctx.stroke();
  }
  ctx.restore();
}

function legend(el, items) {
  el.innerHTML = items.map(([name, c]) => `<span><i style="background:${c}"></i>${name}</span>`).join("");
}

function guard(statsEl, fn) {
  try {
    statsEl.classList.remove("err");
    fn();
  } catch (e) {
    statsEl.classList.add("err");
    statsEl.textContent = String(e.message ?? e);
  }
}

function runDenoise(form) {
  const p = readForm(form);
  const stats = document.getElementById("denoise-stats");
  guard(stats, () => {
    const v = denoise_demo(p.n, p.k, p.lambda, p.gamma, p.seed, p.iterations);
    const x = v.x;
    plot(
      document.getElementById("denoise-mod1"),
      [
        { x, y: v.noisy, color: COLORS.noisy, dots: true },
        { x, y: v.clean, color: COLORS.clean, dots: true },
        { x, y: v.qcqp, color: COLORS.qcqp, dots: true },
        { x, y: v.iqcqp, color: COLORS.iqcqp, dots: true },
      ],
      { yRange: [0, 1] },
    );
    plot(document.getElementById("denoise-f"), [
      { x, y: v.f, color: COLORS.clean, width: 3 },
      { x, y: v.olsF, color: COLORS.ols },
      { x, y: v.qcqpF, color: COLORS.qcqp },
      { x, y: v.iqcqpF, color: COLORS.iqcqp },
    ]);
    legend(document.getElementById("denoise-legend"), [
      ["clean", COLORS.clean],
      ["noisy", COLORS.noisy],
      ["OLS", COLORS.ols],
      ["QCQP", COLORS.qcqp],
      [`iQCQP (${p.iterations})`, COLORS.iqcqp],
    ]);
    const s = v.stats.map((t) => t.toFixed(4));
    stats.textContent =
      `wrap RMSE    noisy ${s[0]}   QCQP ${s[1]}   iQCQP ${s[2]}\n` +
      `shifted RMSE OLS   ${s[3]}   QCQP ${s[4]}   iQCQP ${s[5]}`;
    v.free();
  });
}

function runSecular(form) {
  const p = readForm(form);
  const stats = document.getElementById("secular-stats");
  guard(stats, () => {
    const v = secular_curve(p.n, p.k, p.lambda, p.gamma, p.seed, 800);
    const logPhi = Array.from(v.phi, (y) => (y > 0 ? Math.log10(y) : NaN));
    const target = Math.log10(v.radiusSq);
    const [lo, hi] = extent([logPhi]);
    plot(document.getElementById("secular-plot"), [{ x: v.mu, y: logPhi, color: COLORS.iqcqp }], {
      yRange: [Math.min(lo, target - 1), Math.min(hi, target + 4)],
      hlines: [{ at: target, color: COLORS.clean }],
      vlines: [{ at: v.muStar, color: COLORS.qcqp }],
    });
    stats.textContent =
      `log10 phi(mu) against mu; dashed: radius n and the root\n` +
      `mu* = ${v.muStar.toPrecision(6)}   smallest pole at mu = ${(-v.minPole).toPrecision(6)}   case: ${v.case}`;
    v.free();
  });
}

function runSpectrum(form) {
  const p = readForm(form);
  const stats = document.getElementById("spectrum-stats");
  guard(stats, () => {
    const v = laplacian_spectrum(p.n, p.k);
    const ev = v.eigenvalues;
    const idx = Array.from(ev, (_, i) => i);
    plot(document.getElementById("spectrum-plot"), [{ x: idx, y: ev, color: COLORS.iqcqp, dots: true }], {
      yRange: [0, Math.max(v.largestBound, ev[ev.length - 1]) * 1.05],
      hlines: [
        { at: v.largestBound, color: COLORS.bound },
        { at: v.fiedlerBound, color: COLORS.ols },
      ],
    });
    stats.textContent =
      `largest ${ev[ev.length - 1].toPrecision(6)} <= ${v.largestBound}\n` +
      `second  ${ev[1].toPrecision(6)} >= ${v.fiedlerBound.toPrecision(6)}\n` +
      (v.ok ? "bounds hold" : "bounds violated");
    v.free();
  });
}

const handlers = { denoise: runDenoise, secular: runSecular, spectrum: runSpectrum };

await init();
for (const [id, fn] of Object.entries(handlers)) {
  const form = document.querySelector(`#${id} form`);
  form.addEventListener("submit", (e) => {
    e.preventDefault();
    fn(form);
  });
  fn(form);
}
