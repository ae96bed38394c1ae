import init, { damped_energy, control_curve, frequency_profile } from './pkg/wave_control_web.js';

// Line plot of (xs, ys) with min/max labels; logY plots log10.
function plot(canvas, xs, ys, { logY = false, dots = false } = {}) {
  const ctx = canvas.getContext('2d');
  const { width: w, height: h } = canvas;
  const pad = 48;
  ctx.clearRect(0, 0, w, h);
  const yv = logY ? ys.map((y) => Math.log10(Math.max(y, 1e-300))) : ys;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...yv), Math.max(...yv)];
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad + ((y0 - y) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = '#999';
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = '#444';
  ctx.font = '12px sans-serif';
  const fmt = (v) => (logY ? `1e${v.toFixed(1)}` : v.toPrecision(4));
  ctx.fillText(fmt(y1), 2, pad + 4);
  ctx.fillText(fmt(y0), 2, h - pad + 4);
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 16);
  ctx.fillText(x1.toPrecision(3), w - pad - 24, h - pad + 16);

  ctx.strokeStyle = '#1f5fa8';
  ctx.fillStyle = '#1f5fa8';
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(yv[i])) : ctx.moveTo(px(x), py(yv[i]))));
  ctx.stroke();
  if (dots) xs.forEach((x, i) => ctx.fillRect(px(x) - 2, py(yv[i]) - 2, 4, 4));
}

function inputs(section) {
  const out = {};
  for (const el of section.querySelectorAll('input')) out[el.name] = el.type === 'number' ? Number(el.value) : el.value;
  return out;
}

function wire(id, action) {
  const section = document.getElementById(id);
  const out = section.querySelector('.out');
  section.querySelector('button').addEventListener('click', () => {
    out.className = 'out';
    out.textContent = 'running...';
    // Let the status paint before the solver blocks the thread.
    setTimeout(() => {
      const t0 = performance.now();
      try {
        const text = action(inputs(section), section.querySelector('canvas'));
        out.textContent = `${text}\n(${((performance.now() - t0) / 1000).toFixed(2)} s)`;
      } catch (err) {
        out.className = 'out err';
        out.textContent = String(err.message ?? err);
      }
    }, 10);
  });
}

await init();

wire('energy', (p, canvas) => {
  const flat = damped_energy(p.modes, p.k, p.l, p.lo, p.hi, p.horizon);
  const ts = [], es = [];
  for (let i = 0; i < flat.length; i += 2) { ts.push(flat[i]); es.push(flat[i + 1]); }
  plot(canvas, ts, es, { logY: true });
  return `E(0) = ${es[0].toExponential(4)}   E(T) = ${es[es.length - 1].toExponential(4)}   (log scale)`;
});

wire('control', (p, canvas) => {
  const c = JSON.parse(control_curve(p.modes, p.iterations, p.lo, p.hi, p.horizon));
  plot(canvas, c.d.map((_, i) => i - 1), c.d, { logY: true, dots: true });
  return [
    `d_j, j = -1..${c.d.length - 2} (log scale)`,
    `predicted |error|^2 ${c.predicted_error.toExponential(6)}`,
    `achieved  |error|^2 ${c.achieved_error.toExponential(6)}`,
    `cost max_t |f(t)|   ${c.cost.toExponential(4)}`,
  ].join('\n');
});

wire('frequency', (p, canvas) => {
  const coeffs = p.coeffs.split(',').map((s) => Number(s.trim())).filter((v) => Number.isFinite(v));
  const flat = frequency_profile(new Float64Array(coeffs), p.cx, p.cy);
  const rs = [], phis = [];
  for (let i = 0; i < flat.length; i += 3) { rs.push(flat[i]); phis.push(flat[i + 2]); }
  plot(canvas, rs, phis, { dots: true });
  return `Phi(r) on (0, 1): ${phis[0].toFixed(4)} -> ${phis[phis.length - 1].toFixed(4)}`;
});
