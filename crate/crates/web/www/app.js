import init, { temperatureView, rankView, convertProblem } from "./pkg/verity_web.js";

const $ = (id) => document.getElementById(id);

// mulberry32; enough for demo data.
function rng(seed) {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussian(next) {
  const u = Math.max(next(), 1e-12);
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * next());
}

function sampleScores() {
  const n = +$("n").value, sep = +$("sep").value, scale = +$("scale").value;
  const next = rng(+$("seed").value);
  const logits = [], labels = [];
  for (let i = 0; i < n; i++) {
    const y = next() < 0.5;
    logits.push(scale * ((y ? sep : -sep) + gaussian(next)));
    labels.push(y);
  }
  return { logits, labels };
}

function call(fn, input) {
  const out = JSON.parse(fn(JSON.stringify(input)));
  if (out.error) throw new Error(out.error);
  return out;
}

// Plot frame mapping [x0,x1]x[y0,y1] into the canvas with a margin.
function frame(canvas, { x0 = 0, x1 = 1, y0 = 0, y1 = 1, xlabel = "", ylabel = "", logx = false } = {}) {
  const ctx = canvas.getContext("2d");
  const m = 38, w = canvas.width - m - 10, h = canvas.height - m - 10;
  const fx = logx ? (x) => (Math.log(x) - Math.log(x0)) / (Math.log(x1) - Math.log(x0)) : (x) => (x - x0) / (x1 - x0);
  const X = (x) => m + fx(x) * w;
  const Y = (y) => 10 + (1 - (y - y0) / (y1 - y0)) * h;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#98a2b3";
  ctx.strokeRect(m, 10, w, h);
  ctx.fillStyle = "#5b6472";
  ctx.font = "11px system-ui";
  ctx.fillText(xlabel, m + w / 2 - 20, canvas.height - 6);
  ctx.save();
  ctx.translate(11, 10 + h / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  ctx.fillText(String(x0), m - 4, 10 + h + 13);
  ctx.fillText(String(x1), m + w - 14, 10 + h + 13);
  ctx.fillText(String(y1), m - 26, 18);
  return { ctx, X, Y };
}

function line(ctx, pts, X, Y, color, width = 2) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(X(x), Y(y)) : ctx.moveTo(X(x), Y(y))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function dots(ctx, rows, X, Y, color) {
  ctx.fillStyle = color;
  for (const r of rows) {
    if (!r.count) continue;
    ctx.beginPath();
    ctx.arc(X(r.mean_score), Y(r.accuracy), 2 + Math.sqrt(r.count) / 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}

let lastFitted = 1;

function temperatureFromSlider() {
  return Math.exp(+$("temp").value);
}

function renderCalibration(data, t) {
  const view = call(temperatureView, {
    ...data,
    bins: +$("bins").value,
    binning: $("binning").value,
    temperature: t,
  });
  lastFitted = view.fitted.T;
  $("temp-out").textContent = view.temperature.toFixed(3);

  const r = frame($("reliability"), { xlabel: "mean score", ylabel: "accuracy" });
  line(r.ctx, [[0, 0], [1, 1]], r.X, r.Y, "#c4cad4", 1);
  line(r.ctx, view.reliability_raw.filter((b) => b.count).map((b) => [b.mean_score, b.accuracy]), r.X, r.Y, "#e07a5f");
  dots(r.ctx, view.reliability_raw, r.X, r.Y, "#e07a5f");
  line(r.ctx, view.reliability.filter((b) => b.count).map((b) => [b.mean_score, b.accuracy]), r.X, r.Y, "#3d5a80");
  dots(r.ctx, view.reliability, r.X, r.Y, "#3d5a80");

  const maxE = Math.max(...view.ece_curve.map(([, e]) => e), 0.01);
  const c = frame($("ece-curve"), { x0: 0.05, x1: 20, y0: 0, y1: +maxE.toFixed(2), xlabel: "T (log)", ylabel: "ECE", logx: true });
  line(c.ctx, view.ece_curve, c.X, c.Y, "#3d5a80");
  c.ctx.strokeStyle = "#e07a5f";
  c.ctx.beginPath();
  c.ctx.moveTo(c.X(view.temperature), c.Y(0));
  c.ctx.lineTo(c.X(view.temperature), c.Y(maxE));
  c.ctx.stroke();

  $("cal-stats").textContent =
    `fitted T     ${view.fitted.T.toFixed(4)}\n` +
    `ECE at T=1   ${view.fitted.ece_before.toFixed(4)}  (orange)\n` +
    `ECE fitted   ${view.fitted.ece_after.toFixed(4)}\n` +
    `ECE shown    ${view.ece.toFixed(4)}  (blue)\n` +
    `evaluations  ${view.fitted.evaluations}`;
}

function renderRanking(data) {
  const view = call(rankView, data);
  const roc = frame($("roc"), { xlabel: "false positive rate", ylabel: "true positive rate" });
  line(roc.ctx, [[0, 0], [1, 1]], roc.X, roc.Y, "#c4cad4", 1);
  line(roc.ctx, view.roc, roc.X, roc.Y, "#3d5a80");
  const pr = frame($("pr"), { xlabel: "recall", ylabel: "precision" });
  line(pr.ctx, view.pr, pr.X, pr.Y, "#3d5a80");
  $("rank-stats").textContent =
    `AUROC        ${view.auroc.toFixed(4)}\nAP           ${view.ap.toFixed(4)}\ntied pairs   ${view.tied_pairs}`;
}

function refresh({ keepTemperature = true } = {}) {
  for (const id of ["n", "sep", "scale"]) $(`${id}-out`).textContent = $(id).value;
  const data = sampleScores();
  try {
    renderCalibration(data, keepTemperature ? temperatureFromSlider() : null);
    if (!keepTemperature) $("temp").value = Math.log(lastFitted);
    renderRanking(data);
  } catch (e) {
    $("cal-stats").innerHTML = `<span class="error">${e.message}</span>`;
  }
}

function convert() {
  const kind = $("kind").value;
  const question = $("question").value;
  let problem;
  if (kind === "boolean") {
    problem = { kind, id: "demo", question, answer: $("answer").checked };
  } else {
    const lines = $("choices").value.split("\n").map((l) => l.trim()).filter(Boolean);
    const answer_index = Math.max(0, lines.findIndex((l) => l.startsWith("*")));
    const choices = lines.map((l) => l.replace(/^\*\s*/, ""));
    problem = { kind, id: "demo", question, choices, answer_index, question_form: $("form").value };
  }
  const out = $("convert-out");
  try {
    const group = call(convertProblem, problem);
    const rows = group.statements
      .map((s) => `<tr><td class="${s.label}">${s.label}</td><td>${s.text.replace(/</g, "&lt;")}</td></tr>`)
      .join("");
    out.innerHTML = `<table><tr><th>label</th><th>statement</th></tr>${rows}</table>`;
  } catch (e) {
    out.innerHTML = `<p class="error">${e.message}</p>`;
  }
}

await init();
for (const id of ["n", "sep", "scale", "seed", "binning", "bins"]) $(id).addEventListener("input", () => refresh({ keepTemperature: false }));
$("temp").addEventListener("input", () => refresh());
$("fit").addEventListener("click", () => refresh({ keepTemperature: false }));
$("kind").addEventListener("change", () => {
  const mc = $("kind").value === "multiple_choice";
  $("mc-fields").hidden = !mc;
  $("bool-fields").hidden = mc;
  $("question").value = mc ? "What would someone wear to protect themselves from a cannon?" : "Do dogs need an instruction manual?";
  convert();
});
$("convert").addEventListener("click", convert);
refresh({ keepTemperature: false });
convert();
