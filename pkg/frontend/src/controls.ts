/**
 * Control bar: pause/resume/reset plus parameter sliders, bounded by the
 * controller's own invariants (gains never below zero). A nack flashes a
 * rejection indicator next to the bar.
 */

import type { CommandPayload } from "./protocol";

export interface SliderSpec {
  name: string;
  label: string;
  min: number;
  max: number;
  step: number;
}

// slider bounds mirror the parameter invariants (all gains >= 0)
export const PARAM_SLIDERS: SliderSpec[] = [
  { name: "k1", label: "repulsion gain k1", min: 0, max: 1.0, step: 0.01 },
  { name: "k2", label: "damping gain k2", min: 0, max: 2.0, step: 0.01 },
  { name: "d_1", label: "influence distance d_1", min: 0.05, max: 0.8, step: 0.01 },
  { name: "kp", label: "attraction gain kp", min: 0, max: 6.0, step: 0.05 },
  { name: "ki", label: "integral gain ki", min: 0, max: 3.0, step: 0.05 },
];

export class ControlBar {
  readonly root: HTMLElement;
  private readonly nackBox: HTMLElement;
  private readonly modeBadge: HTMLElement;
  private nackTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(doc: Document, private readonly send: (cmd: CommandPayload) => void,
              initialParams: Record<string, number>) {
    this.root = doc.createElement("div");
    this.root.className = "control-bar";

    for (const [action, label] of [["pause", "Pause"], ["resume", "Resume"],
                                   ["reset", "Reset"]] as const) {
      const btn = doc.createElement("button");
      btn.textContent = label;
      btn.dataset.action = action;
      btn.addEventListener("click", () => this.send({ action }));
      this.root.appendChild(btn);
    }

    for (const spec of PARAM_SLIDERS) {
      const wrap = doc.createElement("label");
      wrap.className = "slider";
      const text = doc.createElement("span");
      const slider = doc.createElement("input");
      slider.type = "range";
      slider.min = String(spec.min);
      slider.max = String(spec.max);
      slider.step = String(spec.step);
      slider.value = String(initialParams[spec.name] ?? spec.min);
      slider.dataset.param = spec.name;
      text.textContent = `${spec.label} = ${slider.value}`;
      slider.addEventListener("change", () => {
        text.textContent = `${spec.label} = ${slider.value}`;
        this.send({ action: "set_param", name: spec.name, value: Number(slider.value) });
      });
      wrap.append(text, slider);
      this.root.appendChild(wrap);
    }

    this.modeBadge = doc.createElement("span");
    this.modeBadge.className = "mode-badge";
    this.root.appendChild(this.modeBadge);

    this.nackBox = doc.createElement("span");
    this.nackBox.className = "nack hidden";
    this.root.appendChild(this.nackBox);
  }

  showMode(mode: string): void {
    this.modeBadge.textContent = mode === "WORK" ? "WORK - avoidance off" : mode;
    this.modeBadge.dataset.mode = mode;
  }

  showNack(reason: string): void {
    this.nackBox.textContent = `rejected: ${reason}`;
    this.nackBox.classList.remove("hidden");
    if (this.nackTimer) clearTimeout(this.nackTimer);
    this.nackTimer = setTimeout(() => this.nackBox.classList.add("hidden"), 2500);
  }
}
