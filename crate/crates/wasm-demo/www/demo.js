// Vanilla glue between the form controls, the canvas and the wasm module.
// Build the module first (see the README):
//   cargo build -p twoweight-wasm --release --target wasm32-unknown-unknown
//   wasm-bindgen --target web --out-dir crates/wasm-demo/www/pkg \
//     target/wasm32-unknown-unknown/release/twoweight_wasm.wasm
import init, {
  demo_scenario,
  constants_report,
  deep_decomposition,
  shadow_diagnostics,
} from "./pkg/twoweight_wasm.js";

const canvas = document.getElementById("view");
const ctx = canvas.getContext("2d");
const probe = document.getElementById("probe");

let scenario = null; // parsed scenario JSON
let scenarioText = ""; // raw JSON handed back to wasm calls
let decomposition = null;
let shadow = null;

// World window around the unit box and the straddling roots.
const world = { x0: -1.7, x1: 2.7, y0: -1.9, y1: 1.9 };

function toCanvas(p) {
  return [
    ((p[0] - world.x0) / (world.x1 - world.x0)) * canvas.width,
    canvas.height - ((p[1] - world.y0) / (world.y1 - world.y0)) * canvas.height,
  ];
}

function toWorld(cx, cy) {
  return [
    world.x0 + (cx / canvas.width) * (world.x1 - world.x0),
    world.y0 + ((canvas.height - cy) / canvas.height) * (world.y1 - world.y0),
  ];
}

function drawBox(lower, upper, stroke, dash = [], fill = null) {
  const [x0, y0] = toCanvas([lower[0], upper[1]]);
  const [x1, y1] = toCanvas([upper[0], lower[1]]);
  ctx.save();
  ctx.setLineDash(dash);
  if (fill) {
    ctx.fillStyle = fill;
    ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
  }
  ctx.strokeStyle = stroke;
  ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
  ctx.restore();
}

function render() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!scenario) return;

  // Axis (the line carrying ω).
  ctx.strokeStyle = "#46566a";
  ctx.beginPath();
  const [ax0, ay] = toCanvas([world.x0, 0]);
  const [ax1] = toCanvas([world.x1, 0]);
  ctx.moveTo(ax0, ay);
  ctx.lineTo(ax1, ay);
  ctx.stroke();

  if (decomposition) {
    drawBox(decomposition.root_lower, decomposition.root_upper, "#5b6d80");
    for (const cube of decomposition.cubes) {
      const place = shadowPlace(cube);
      const color =
        place === "Side" ? "#e06c75" : cube.good ? "#5fbf77" : "#d8a054";
      drawBox(cube.lower, cube.upper, color, [], colorFill(color));
      drawBox(cube.dilated_lower, cube.dilated_upper, "#3b4854", [5, 4]);
    }
  }

  // Carleson shadow of the probe point.
  if (shadow) {
    const [sx0, sy] = toCanvas([shadow.shadow_lo, 0]);
    const [sx1] = toCanvas([shadow.shadow_hi, 0]);
    ctx.strokeStyle = "#e06c75";
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(sx0, sy);
    ctx.lineTo(sx1, sy);
    ctx.stroke();
    ctx.lineWidth = 1;
    const [px, py] = toCanvas(shadow.point);
    ctx.strokeStyle = "#e06c75";
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo((sx0 + sx1) / 2, sy);
    ctx.stroke();
  }

  // Atoms: area encodes mass.
  for (const atom of scenario.sigma.atoms) {
    const [x, y] = toCanvas(atom.location);
    ctx.fillStyle = "#e8b44c";
    ctx.beginPath();
    ctx.arc(x, y, 2.5 + 2 * Math.sqrt(atom.mass), 0, 2 * Math.PI);
    ctx.fill();
  }
  for (const atom of scenario.omega.atoms) {
    const [x, y] = toCanvas(atom.location);
    const r = 2.5 + 2 * Math.sqrt(atom.mass);
    ctx.fillStyle = "#56c2d6";
    ctx.fillRect(x - r / 2, y - r / 2, r, r);
  }
}

function colorFill(stroke) {
  return stroke + "22"; // translucent fill of the same hue
}

function shadowPlace(cube) {
  if (!shadow) return null;
  const hit = shadow.cubes.find(
    (c) => c.lower[0] === cube.lower[0] && c.lower[1] === cube.lower[1]
  );
  return hit ? hit.place : null;
}

function currentControls() {
  return {
    seed: BigInt(document.getElementById("seed").value || 0),
    alpha: parseFloat(document.getElementById("alpha").value || 1),
    nsigma: parseInt(document.getElementById("nsigma").value || 6, 10),
    nomega: parseInt(document.getElementById("nomega").value || 6, 10),
    grid: parseInt(document.getElementById("grid").value, 10),
    ell: parseInt(document.getElementById("ell").value || 0, 10),
  };
}

function regenerate() {
  const c = currentControls();
  scenarioText = demo_scenario(c.seed, c.alpha, c.nsigma, c.nomega);
  scenario = JSON.parse(scenarioText);
  if (scenario.error) {
    probe.textContent = "scenario error: " + scenario.error;
    scenario = null;
    return;
  }
  const decompositionText = deep_decomposition(scenarioText, c.grid, c.ell);
  decomposition = JSON.parse(decompositionText);
  if (decomposition.error) {
    probe.textContent = "decomposition error: " + decomposition.error;
    decomposition = null;
  }
  shadow = null;
  render();
}

function recompute() {
  if (!scenarioText) return;
  probe.textContent = "computing constants…";
  setTimeout(() => {
    const report = JSON.parse(constants_report(scenarioText));
    const tbody = document.querySelector("#constants tbody");
    tbody.innerHTML = "";
    if (report.error) {
      probe.textContent = "constants error: " + report.error;
      return;
    }
    for (const [name, entry] of Object.entries(report)) {
      const row = document.createElement("tr");
      const witness =
        entry.witness.kind === "empty"
          ? "—"
          : JSON.stringify(entry.witness).slice(0, 60);
      row.innerHTML = `<td>${name}</td><td>${entry.value.toExponential(
        6
      )}</td><td>${witness}</td>`;
      tbody.appendChild(row);
    }
    probe.textContent = "constants ready.";
  }, 10);
}

canvas.addEventListener("mousemove", (event) => {
  if (!scenarioText) return;
  const rect = canvas.getBoundingClientRect();
  const [wx, wy] = toWorld(event.clientX - rect.left, event.clientY - rect.top);
  const c = currentControls();
  const result = JSON.parse(shadow_diagnostics(scenarioText, c.grid, wx, wy));
  if (result.error) {
    shadow = null;
    probe.textContent = result.error;
  } else {
    shadow = result;
    const sides = result.cubes.filter((q) => q.place === "Side").length;
    probe.textContent =
      `probe (${wx.toFixed(3)}, ${wy.toFixed(3)}): ` +
      `F = ${result.f_value.toExponential(4)} (${result.regime}), ` +
      `${sides} side cube(s), shadow [${result.shadow_lo.toFixed(3)}, ` +
      `${result.shadow_hi.toFixed(3)}]`;
  }
  render();
});

for (const id of ["grid", "ell"]) {
  document.getElementById(id).addEventListener("change", regenerate);
}
document.getElementById("regen").addEventListener("click", regenerate);
document.getElementById("compute").addEventListener("click", recompute);

await init();
regenerate();
recompute();
