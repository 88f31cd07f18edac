import * as THREE from "three";

import { BridgeClient } from "./client";
import { ControlBar } from "./controls";
import { DragController } from "./drag";
import { StripChart } from "./plots";
import { warningDistance } from "./protocol";
import { SceneModel } from "./scene";
import { SessionState } from "./session";

const wsUrl = new URLSearchParams(location.search).get("ws")
  ?? "ws://127.0.0.1:8765";

const app = document.getElementById("app")!;
const statusLine = document.getElementById("status")!;
statusLine.textContent = `connecting to ${wsUrl} ...`;

const session = new SessionState();
let sceneModel: SceneModel | null = null;
let drag: DragController | null = null;
let controls: ControlBar | null = null;

const renderer = new THREE.WebGLRenderer({ antialias: true });
const viewport = document.getElementById("viewport")!;
renderer.setSize(viewport.clientWidth, viewport.clientHeight);
viewport.appendChild(renderer.domElement);

const scene = new THREE.Scene();
scene.background = new THREE.Color(0x1b2026);
const camera = new THREE.PerspectiveCamera(
  50, viewport.clientWidth / viewport.clientHeight, 0.05, 20);
camera.up.set(0, 0, 1);  // world frame is z-up
camera.position.set(2.2, -1.6, 1.5);
camera.lookAt(0.5, 0, 0.5);
scene.add(new THREE.AmbientLight(0xffffff, 0.7));
const sun = new THREE.DirectionalLight(0xffffff, 1.2);
sun.position.set(2, -3, 4);
scene.add(sun);
const grid = new THREE.GridHelper(4, 16, 0x39424d, 0x2a323b);
grid.rotation.x = Math.PI / 2;  // grid lies in the x-y floor plane
scene.add(grid);

const socket = new WebSocket(wsUrl);
const client = new BridgeClient(socket as never, session, {
  onHello(hello) {
    statusLine.textContent =
      `connected - model ${hello.model}, tick ${(1 / hello.dt).toFixed(0)} Hz`;
    sceneModel = new SceneModel(hello.robot_capsules, hello.human_capsules);
    scene.add(sceneModel.root);
    drag = new DragController(camera, sceneModel, (cmd) => client.send(cmd),
                              Math.min(1.0, hello.human_speed_limit));
    controls = new ControlBar(document, (cmd) => client.send(cmd), hello.params);
    document.getElementById("controls")!.appendChild(controls.root);
  },
  onFrame(frame) {
    if (!sceneModel || !session.hello) return;
    const warn = warningDistance(session.hello.params, frame.v_rel);
    sceneModel.applyFrame(frame, warn);
    controls?.showMode(frame.mode);
  },
  onNack(_seq, reason) {
    controls?.showNack(reason);
  },
  onStatus(status) {
    if (status === "closed") statusLine.textContent = "connection closed";
  },
});

// pointer -> normalized device coordinates over the viewport
function ndcOf(ev: PointerEvent) {
  const rect = renderer.domElement.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * 2 - 1,
    y: -(((ev.clientY - rect.top) / rect.height) * 2 - 1),
  };
}

renderer.domElement.addEventListener("pointerdown", (ev) => {
  if (drag?.pointerDown({ ndc: ndcOf(ev), timeMs: performance.now() })) {
    renderer.domElement.setPointerCapture(ev.pointerId);
  }
});
renderer.domElement.addEventListener("pointermove", (ev) => {
  drag?.pointerMove({ ndc: ndcOf(ev), timeMs: performance.now() });
});
renderer.domElement.addEventListener("pointerup", (ev) => {
  drag?.pointerUp();
  renderer.domElement.releasePointerCapture(ev.pointerId);
});

const charts = [
  new StripChart(document.getElementById("plot-dmin") as HTMLCanvasElement,
                 { label: "d_min [m]", buffer: session.dMin, color: "#6fd3ff",
                   yMin: 0, yMax: null, refLine: 0.05 }),
  new StripChart(document.getElementById("plot-speed") as HTMLCanvasElement,
                 { label: "EEF speed [m/s]", buffer: session.eefSpeed,
                   color: "#ffd166", yMin: 0, yMax: null }),
  new StripChart(document.getElementById("plot-gamma") as HTMLCanvasElement,
                 { label: "ramp gamma", buffer: session.gamma, color: "#9ef01a",
                   yMin: 0, yMax: 1 }),
  new StripChart(document.getElementById("plot-beta") as HTMLCanvasElement,
                 { label: "detachment beta", buffer: session.beta,
                   color: "#f48fb1", yMin: 0, yMax: 1 }),
];

// render loop with a once-a-second FPS readout
let frames = 0;
let lastFpsT = performance.now();
function animate() {
  requestAnimationFrame(animate);
  renderer.render(scene, camera);
  for (const chart of charts) chart.render();
  frames++;
  const now = performance.now();
  if (now - lastFpsT >= 1000) {
    const fps = (frames * 1000) / (now - lastFpsT);
    document.getElementById("fps")!.textContent =
      `${fps.toFixed(0)} fps / frames rx ${session.framesReceived}`;
    frames = 0;
    lastFpsT = now;
  }
}
animate();

window.addEventListener("resize", () => {
  renderer.setSize(viewport.clientWidth, viewport.clientHeight);
  camera.aspect = viewport.clientWidth / viewport.clientHeight;
  camera.updateProjectionMatrix();
});

export { app };
