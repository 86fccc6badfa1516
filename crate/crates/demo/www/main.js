import init, { owner_map, spectrum, bsp_cost } from "./pkg/fftu_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function paint(canvas, n, colour) {
  canvas.width = n;
  canvas.height = n;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  for (let i = 0; i < n * n; i++) {
    const [r, g, b] = colour(i);
    img.data.set([r, g, b, 255], 4 * i);
  }
  ctx.putImageData(img, 0, 0);
}

function hue(rank, count) {
  const h = (rank * 360) / Math.max(count, 1);
  const f = (k) => {
    const t = (k + h / 30) % 12;
    return Math.round(255 * (0.55 - 0.45 * Math.max(-1, Math.min(t - 3, 9 - t, 1))));
  };
  return [f(0), f(8), f(4)];
}

function grey(v, lo, hi) {
  const t = hi > lo ? Math.round((255 * (v - lo)) / (hi - lo)) : 0;
  return [t, t, t];
}

function report(el, fn) {
  try {
    el.classList.remove("error");
    fn();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e.message ?? e);
  }
}

function drawDistribution() {
  const n = num("d-n"), pr = num("d-pr"), pc = num("d-pc");
  const strategy = $("d-strategy").value;
  report($("d-msg"), () => {
    const owners = owner_map(n, n, strategy, pr, pc);
    paint($("d-canvas"), n, (i) => hue(owners[i], pr * pc));
    $("d-msg").textContent = `${pr * pc} processors; colour = owning rank`;
  });
}

function drawSpectrum() {
  const n = num("s-n");
  report($("s-msg"), () => {
    const s = spectrum($("s-kind").value, n, num("s-pr"), num("s-pc"));
    const x = s.input();
    const y = s.log_magnitude();
    const [xlo, xhi, yhi] = [Math.min(...x), Math.max(...x), Math.max(...y)];
    paint($("s-input"), n, (i) => grey(x[i], xlo, xhi));
    paint($("s-output"), n, (i) => grey(y[i], 0, yhi));
    const t = JSON.parse(s.summary());
    $("s-msg").textContent =
      `residual vs sequential ${s.residual().toExponential(2)}; ` +
      `${t.communicate_supersteps} communicate superstep, ${t.max_words_sent} words per rank`;
    s.free();
  });
}

function showCost() {
  report($("c-out"), () => {
    const json = bsp_cost($("c-shape").value, $("c-grid").value, num("c-g"), num("c-l"));
    $("c-out").textContent = JSON.stringify(JSON.parse(json), null, 2);
  });
}

await init();
for (const [ids, fn] of [
  [["d-n", "d-strategy", "d-pr", "d-pc"], drawDistribution],
  [["s-kind", "s-n", "s-pr", "s-pc"], drawSpectrum],
  [["c-shape", "c-grid", "c-g", "c-l"], showCost],
]) {
  ids.forEach((id) => $(id).addEventListener("input", fn));
  fn();
}
