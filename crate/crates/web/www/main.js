import init, { chain_samples, chisq_tail, imhof_vs_truth } from "./pkg/smallp_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function drawRegion(l1, l2, q, pts) {
  const c = $("plot");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  let r = 1.2 * Math.sqrt(q / Math.min(l1, l2));
  for (let i = 0; i < pts.length; i++) r = Math.max(r, 1.05 * Math.abs(pts[i]));
  const s = c.width / (2 * r);
  const px = (x) => c.width / 2 + x * s;
  const py = (y) => c.height / 2 - y * s;

  // Boundary ellipse and axes.
  g.strokeStyle = "#999";
  g.beginPath();
  g.ellipse(c.width / 2, c.height / 2, Math.sqrt(q / l1) * s, Math.sqrt(q / l2) * s, 0, 0, 2 * Math.PI);
  g.stroke();
  g.strokeStyle = "#eee";
  g.beginPath();
  g.moveTo(0, c.height / 2); g.lineTo(c.width, c.height / 2);
  g.moveTo(c.width / 2, 0); g.lineTo(c.width / 2, c.height);
  g.stroke();

  g.fillStyle = "rgba(30, 90, 200, 0.35)";
  for (let i = 0; i < pts.length; i += 2) g.fillRect(px(pts[i]) - 1, py(pts[i + 1]) - 1, 2, 2);
}

function show(text) {
  $("out").textContent = text;
}

function pretty(json) {
  return JSON.stringify(JSON.parse(json), null, 2);
}

await init();

$("run-chain").onclick = () => {
  const [l1, l2, q] = [num("l1"), num("l2"), num("q")];
  try {
    const pts = chain_samples(l1, l2, q, $("sampler").value, num("draws"), num("seed"));
    drawRegion(l1, l2, q, pts);
  } catch (e) {
    show(String(e));
  }
};

$("run-ce").onclick = () => {
  try {
    const t0 = performance.now();
    const res = chisq_tail(num("df"), num("logp"), 10000, 10000, num("seed"));
    show(pretty(res) + `\n${((performance.now() - t0) / 1000).toFixed(2)} s`);
  } catch (e) {
    show(String(e));
  }
};

$("run-imhof").onclick = () => {
  try {
    show(pretty(imhof_vs_truth(num("df"), num("logp"))));
  } catch (e) {
    show(String(e));
  }
};

$("run-chain").click();
