import init, { fieldShape, manipulabilityMap, simulate } from "./pkg/iagf_wasm.js";

const $ = (id) => document.getElementById(id);
const DAMPING = "#2a7fd4";
const STIFFNESS = "#d4542a";

// world rectangle -> canvas transform
function view(canvas, xmin, xmax, ymin, ymax) {
  const s = Math.min(canvas.width / (xmax - xmin), canvas.height / (ymax - ymin));
  const ox = (canvas.width - s * (xmax - xmin)) / 2;
  const oy = (canvas.height - s * (ymax - ymin)) / 2;
  return {
    s,
    x: (x) => ox + (x - xmin) * s,
    y: (y) => canvas.height - oy - (y - ymin) * s,
  };
}

function polyline(ctx, pts, close) {
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  if (close) ctx.closePath();
  ctx.stroke();
}

function arrow(ctx, x0, y0, x1, y1) {
  const a = Math.atan2(y1 - y0, x1 - x0);
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.lineTo(x1 - 8 * Math.cos(a - 0.4), y1 - 8 * Math.sin(a - 0.4));
  ctx.moveTo(x1, y1);
  ctx.lineTo(x1 - 8 * Math.cos(a + 0.4), y1 - 8 * Math.sin(a + 0.4));
  ctx.stroke();
}

function bindLabels(ids) {
  for (const id of ids) $(id + "-v").textContent = $(id).value;
}

// field shape

function drawField() {
  bindLabels(["f-d1", "f-d2", "f-angle"]);
  const mode = $("f-mode").value;
  const d1 = +$("f-d1").value;
  const shape = JSON.parse(fieldShape(mode, d1, +$("f-d2").value, +$("f-angle").value, 128));
  const c = $("f-canvas");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const r = 6.2;
  const v = view(c, -r / 2 - 0.1, r / 2 + 0.1, -r / 2 - 0.1, r / 2 + 0.1);
  ctx.strokeStyle = "#ddd";
  ctx.beginPath();
  ctx.arc(v.x(0), v.y(0), d1 * v.s, 0, 2 * Math.PI);
  ctx.stroke();
  const pts = [];
  for (let i = 0; i < shape.points.length; i += 2) pts.push([v.x(shape.points[i]), v.y(shape.points[i + 1])]);
  ctx.strokeStyle = mode === "passive" ? DAMPING : STIFFNESS;
  ctx.lineWidth = 2;
  polyline(ctx, pts, true);
  ctx.lineWidth = 1;
  const a = (+$("f-angle").value * Math.PI) / 180;
  ctx.strokeStyle = "#333";
  arrow(ctx, v.x(0), v.y(0), v.x(Math.cos(a) * 1.2), v.y(Math.sin(a) * 1.2));
  $("f-info").textContent =
    `d2 (clamped) ${shape.d2.toFixed(3)}\nshortest ${shape.d_min.toFixed(3)}\nlongest  ${shape.d_max.toFixed(3)}\n` +
    (mode === "passive" ? "least damping along the arrow" : "most stiffness along the arrow");
}

// manipulability map

function drawMap() {
  bindLabels(["m-l1", "m-l2"]);
  const l1 = +$("m-l1").value;
  const l2 = +$("m-l2").value;
  const c = $("m-canvas");
  const n = c.width;
  const grid = manipulabilityMap(l1, l2, n);
  const ctx = c.getContext("2d");
  const img = ctx.createImageData(n, n);
  const mmax = l1 * l2;
  for (let i = 0; i < n * n; i++) {
    const m = grid[i];
    let rgb;
    if (Number.isNaN(m)) rgb = [235, 235, 235];
    else if (m < 0.03) rgb = [220, 40, 40];
    else if (m <= 0.08) rgb = [240, 160, 40];
    else {
      const t = Math.min(1, m / mmax);
      rgb = [255 - 200 * t, 255 - 120 * t, 255 - 30 * t];
    }
    img.data.set([...rgb, 255], 4 * i);
  }
  ctx.putImageData(img, 0, 0);
  $("m-info").textContent = `reach ${(l1 + l2).toFixed(2)} m\nmax m ${mmax.toFixed(4)}`;
}

// scripted episode

function drawEpisode() {
  bindLabels(["e-noise"]);
  let t;
  try {
    t = JSON.parse(simulate($("e-scenario").value, $("e-method").value, +$("e-seed").value, +$("e-noise").value));
  } catch (e) {
    $("e-info").textContent = String(e);
    return;
  }
  const c = $("e-canvas");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const v = view(c, -0.85, 0.85, -0.1, 0.9);
  const reach = t.link_lengths.reduce((a, b) => a + b, 0);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.arc(v.x(0), v.y(0), reach * v.s, 0, 2 * Math.PI);
  ctx.stroke();

  const fmax = Math.max(1e-9, ...t.force);
  for (let i = 1; i < t.x.length; i++) {
    const k = t.force[i] / fmax;
    ctx.strokeStyle = `rgb(${Math.round(40 + 200 * k)}, 80, ${Math.round(200 - 160 * k)})`;
    ctx.beginPath();
    ctx.moveTo(v.x(t.x[i - 1]), v.y(t.y[i - 1]));
    ctx.lineTo(v.x(t.x[i]), v.y(t.y[i]));
    ctx.stroke();
  }
  for (const g of t.goals) {
    ctx.fillStyle = "#333";
    ctx.beginPath();
    ctx.arc(v.x(g.position[0]), v.y(g.position[1]), 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(g.id, v.x(g.position[0]) + 7, v.y(g.position[1]) - 7);
  }
  // final arm pose
  let ang = 0;
  let p = [0, 0];
  const pts = [[v.x(0), v.y(0)]];
  t.q.forEach((q, i) => {
    ang += q;
    p = [p[0] + t.link_lengths[i] * Math.cos(ang), p[1] + t.link_lengths[i] * Math.sin(ang)];
    pts.push([v.x(p[0]), v.y(p[1])]);
  });
  ctx.strokeStyle = "#555";
  ctx.lineWidth = 3;
  polyline(ctx, pts, false);
  ctx.lineWidth = 1;

  plotSeries($("e-plot"), t);
  const m = t.metrics;
  $("e-info").textContent =
    `success ${m.success}\ncompletion ${m.completion_time.toFixed(2)} s\ndisagreement ${m.disagreement.toFixed(4)}\n` +
    `alignment ${m.alignment_time.toFixed(2)} s\nmin m ${m.min_manipulability.toFixed(4)}`;
}

function plotSeries(c, t) {
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const n = t.m.length;
  const half = c.height / 2;
  const xs = (i) => 30 + ((c.width - 40) * i) / Math.max(1, n - 1);
  const mmax = 0.16;
  ctx.fillStyle = "#fde3c0";
  ctx.fillRect(30, half - 10 - (half - 20) * (t.m_th / mmax), c.width - 40, (half - 20) * ((t.m_th - t.m_crit) / mmax));
  const series = (vals, top, scale, color) => {
    ctx.strokeStyle = color;
    polyline(ctx, vals.map((val, i) => [xs(i), top + (half - 20) * (1 - Math.min(1, val / scale))]), false);
  };
  series(t.m, 10, mmax, "#333");
  series(t.confidence, half + 10, 1, "#2a7fd4");
  ctx.fillStyle = "#333";
  ctx.fillText("m", 5, 20);
  ctx.fillText("C", 5, half + 20);
  ctx.fillText(`${(n * t.dt).toFixed(1)} s`, c.width - 40, c.height - 2);
}

// live session

const live = { ws: null, seq: 0, keys: new Set(), setup: null, frame: null, timer: null };

function send(kind, payload) {
  if (live.ws && live.ws.readyState === WebSocket.OPEN) {
    live.ws.send(JSON.stringify({ seq: live.seq++, kind, payload }));
  }
}

function command() {
  const k = live.keys;
  let x = (k.has("ArrowRight") || k.has("d") ? 1 : 0) - (k.has("ArrowLeft") || k.has("a") ? 1 : 0);
  let y = (k.has("ArrowUp") || k.has("w") ? 1 : 0) - (k.has("ArrowDown") || k.has("s") ? 1 : 0);
  const n = Math.hypot(x, y);
  return n > 1 ? [x / n, y / n] : [x, y];
}

function connect() {
  if (live.ws) live.ws.close();
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(`${proto}://${location.host}/session`);
  live.ws = ws;
  live.seq = 0;
  ws.onopen = () => {
    send("hello", { version: 1 });
    send("config", { method: $("l-method").value, scenario: $("l-scenario").value });
  };
  ws.onmessage = (ev) => {
    let msg;
    try {
      msg = JSON.parse(ev.data);
    } catch {
      return;
    }
    if (msg.kind === "config") live.setup = msg.payload.setup;
    else if (msg.kind === "frame") {
      live.frame = msg.payload;
      drawLive();
    } else if (msg.kind === "event") {
      const p = msg.payload;
      $("l-info").textContent = `${p.name}${p.detail ? ": " + p.detail : ""}` +
        (p.metrics ? `\n${JSON.stringify(p.metrics, null, 1)}` : "");
    }
  };
  ws.onclose = () => {
    clearInterval(live.timer);
    live.timer = null;
  };
  clearInterval(live.timer);
  live.timer = setInterval(() => send("input", { command: command(), client_time: performance.now() / 1000 }), 20);
  $("l-canvas").focus();
}

function drawLive() {
  const f = live.frame;
  const s = live.setup;
  if (!f || !s) return;
  const c = $("l-canvas");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const v = view(c, -0.9, 0.9, -0.15, 0.95);
  s.goals.forEach((g, i) => {
    const p = f.belief.posterior[i];
    ctx.fillStyle = `rgba(30, 30, 30, ${0.2 + 0.8 * p})`;
    ctx.beginPath();
    ctx.arc(v.x(g.position[0]), v.y(g.position[1]), 5 + 10 * p, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(`${g.id} ${(p * 100).toFixed(0)}%`, v.x(g.position[0]) + 14, v.y(g.position[1]));
  });
  ctx.strokeStyle = "#555";
  ctx.lineWidth = 3;
  polyline(ctx, f.state.joints.map(([x, y]) => [v.x(x), v.y(y)]), false);
  ctx.lineWidth = 1;
  const [ex, ey] = f.state.x;
  const scale = 0.03;
  for (const field of f.fields) {
    ctx.strokeStyle = field.spec.mode === "passive" ? DAMPING : STIFFNESS;
    polyline(ctx, field.boundary.map(([x, y]) => [v.x(ex + scale * x), v.y(ey + scale * y)]), true);
  }
  ctx.strokeStyle = "#a0a";
  arrow(ctx, v.x(ex), v.y(ey), v.x(ex + 0.01 * f.f_c[0]), v.y(ey + 0.01 * f.f_c[1]));
  // manipulability gauge
  const gx = c.width - 24;
  const gh = c.height - 40;
  const mmax = 0.16;
  ctx.fillStyle = "#eee";
  ctx.fillRect(gx, 20, 12, gh);
  ctx.fillStyle = "#f0a028";
  ctx.fillRect(gx, 20 + gh * (1 - s.m_th / mmax), 12, gh * ((s.m_th - s.m_crit) / mmax));
  ctx.fillStyle = "#dc2828";
  ctx.fillRect(gx, 20 + gh * (1 - s.m_crit / mmax), 12, gh * (s.m_crit / mmax));
  ctx.fillStyle = "#000";
  ctx.fillRect(gx - 4, 20 + gh * (1 - Math.min(1, f.m / mmax)), 20, 2);
  ctx.fillText(`t ${f.t.toFixed(1)} s  C ${f.belief.confidence.toFixed(2)}  m ${f.m.toFixed(3)}`, 8, 16);
}

window.addEventListener("keydown", (e) => {
  if (document.activeElement === $("l-canvas")) {
    live.keys.add(e.key.length === 1 ? e.key.toLowerCase() : e.key);
    e.preventDefault();
  }
});
window.addEventListener("keyup", (e) => live.keys.delete(e.key.length === 1 ? e.key.toLowerCase() : e.key));
window.addEventListener("blur", () => live.keys.clear());

await init();
for (const id of ["f-mode", "f-d1", "f-d2", "f-angle"]) $(id).addEventListener("input", drawField);
for (const id of ["m-l1", "m-l2"]) $(id).addEventListener("input", drawMap);
$("e-noise").addEventListener("input", () => bindLabels(["e-noise"]));
$("e-run").addEventListener("click", drawEpisode);
$("l-connect").addEventListener("click", connect);
drawField();
drawMap();
drawEpisode();
