import init, { skeletonReport, nmsDemo, fractureDemo } from "./pkg/lareval_web.js";

const $ = (id) => document.getElementById(id);
const fmt = (v, d = 2) => (typeof v === "number" ? v.toFixed(d) : String(v));

// paint set-pixel indices of a w x h mask scaled onto a canvas
function paint(ctx, indices, w, scale, color) {
  ctx.fillStyle = color;
  for (const i of indices) {
    ctx.fillRect((i % w) * scale, Math.floor(i / w) * scale, scale, scale);
  }
}

function bindValue(id, digits = 0) {
  const input = $(id);
  const out = $(id + "-v");
  const show = () => (out.textContent = Number(input.value).toFixed(digits));
  input.addEventListener("input", show);
  show();
  return input;
}

// 1. drawing pad
function setupDraw() {
  const canvas = $("draw");
  const ctx = canvas.getContext("2d");
  const scale = 2;
  const w = canvas.width / scale;
  const h = canvas.height / scale;
  const pixels = new Uint8Array(w * h);
  const brush = bindValue("brush");
  const eps = bindValue("eps", 1);
  let drawing = false;
  let last = null;

  function stamp(cx, cy) {
    const r = Number(brush.value);
    for (let y = Math.max(0, cy - r); y <= Math.min(h - 1, cy + r); y++) {
      for (let x = Math.max(0, cx - r); x <= Math.min(w - 1, cx + r); x++) {
        if ((x - cx) ** 2 + (y - cy) ** 2 <= r * r) pixels[y * w + x] = 1;
      }
    }
  }

  function line(a, b) {
    const n = Math.max(Math.abs(b[0] - a[0]), Math.abs(b[1] - a[1]), 1);
    for (let k = 0; k <= n; k++) {
      stamp(Math.round(a[0] + ((b[0] - a[0]) * k) / n), Math.round(a[1] + ((b[1] - a[1]) * k) / n));
    }
  }

  function render() {
    const r = JSON.parse(skeletonReport(pixels, w, h, Number(eps.value)));
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const mask = [];
    pixels.forEach((v, i) => v && mask.push(i));
    paint(ctx, mask, w, scale, "#c9dcf0");
    paint(ctx, r.skeleton, w, scale, "#b00");
    if ($("show-poly").checked && r.polyline.length > 1) {
      ctx.strokeStyle = "#080";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      r.polyline.forEach(([x, y], k) => {
        const px = (x + 0.5) * scale;
        const py = (y + 0.5) * scale;
        k ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
      });
      ctx.stroke();
    }
    for (const cell of document.querySelectorAll("#lengths [data-k]")) {
      const v = r[cell.dataset.k];
      cell.textContent = Number.isInteger(v) ? v : fmt(v);
    }
  }

  const at = (e) => {
    const rect = canvas.getBoundingClientRect();
    return [
      Math.floor(((e.clientX - rect.left) / rect.width) * w),
      Math.floor(((e.clientY - rect.top) / rect.height) * h),
    ];
  };
  canvas.addEventListener("pointerdown", (e) => {
    drawing = true;
    last = at(e);
    stamp(...last);
    render();
  });
  canvas.addEventListener("pointermove", (e) => {
    if (!drawing) return;
    const p = at(e);
    line(last, p);
    last = p;
    render();
  });
  window.addEventListener("pointerup", () => (drawing = false));
  $("clear").addEventListener("click", () => {
    pixels.fill(0);
    render();
  });
  eps.addEventListener("input", render);
  $("show-poly").addEventListener("change", render);

  // start with a gentle arc so the table is not empty
  let prev = null;
  for (let t = 0; t <= 1; t += 0.01) {
    const p = [Math.round(30 + 180 * t), Math.round(120 - 70 * Math.sin(Math.PI * t))];
    if (prev) line(prev, p);
    prev = p;
  }
  render();
}

// 2. box vs mask NMS
function setupNms() {
  const canvas = $("nms");
  const ctx = canvas.getContext("2d");
  const inputs = [bindValue("offset"), bindValue("thick"), bindValue("nms-t", 2)];
  function render() {
    const r = JSON.parse(nmsDemo(Number(inputs[0].value), Number(inputs[1].value), Number(inputs[2].value)));
    const scale = canvas.width / r.width;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    paint(ctx, r.first, r.width, scale, "rgba(30, 90, 200, 0.8)");
    paint(ctx, r.second, r.width, scale, "rgba(220, 120, 20, 0.8)");
    $("box-iou").textContent = fmt(r.box_iou, 3);
    $("mask-iou").textContent = fmt(r.mask_iou, 3);
    $("kept-box").textContent = r.kept_by_box;
    $("kept-mask").textContent = r.kept_by_mask;
  }
  inputs.forEach((i) => i.addEventListener("input", render));
  render();
}

// 3. fracture slider
function setupFracture() {
  const canvas = $("frac");
  const ctx = canvas.getContext("2d");
  const inputs = [bindValue("seed"), bindValue("gap"), bindValue("pos", 2), bindValue("stroke")];
  function render() {
    const [seed, gap, pos, stroke] = inputs.map((i) => Number(i.value));
    const r = JSON.parse(fractureDemo(seed, gap, pos, stroke));
    const scale = canvas.width / r.width;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    paint(ctx, r.ground_truth, r.width, scale, "#f2c4c4");
    paint(ctx, r.prediction, r.width, scale, "#2a6");
    $("f-analytic").textContent = fmt(r.analytic_length, 1);
    $("f-gt").textContent = fmt(r.gt_length, 1);
    $("f-pred").textContent = fmt(r.pred_length, 1);
    $("f-iou").textContent = fmt(r.iou, 3);
    $("f-lar").textContent = r.matched ? fmt(r.lar, 3) : "0 (unmatched)";
  }
  inputs.forEach((i) => i.addEventListener("input", render));
  render();
}

init()
  .then(() => {
    $("status").textContent = "";
    setupDraw();
    setupNms();
    setupFracture();
  })
  .catch((e) => {
    $("status").textContent = "Could not load the WebAssembly module: " + e;
  });
