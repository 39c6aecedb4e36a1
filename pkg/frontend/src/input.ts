// Keyboard steering. Arrow keys / WASD nudge the commanded tool
// position laterally, Q/E move it along the insertion axis; holding
// several keys sums their directions. The sampler is pull-based: the
// render loop asks for a pose at most `maxHz` times a second, and an
// idle console (no keys held) produces nothing at all.

export type Vec3 = [number, number, number];

export const KEY_VECTORS: Record<string, Vec3> = {
  ArrowLeft: [-1, 0, 0],
  KeyA: [-1, 0, 0],
  ArrowRight: [1, 0, 0],
  KeyD: [1, 0, 0],
  ArrowUp: [0, 1, 0],
  KeyW: [0, 1, 0],
  ArrowDown: [0, -1, 0],
  KeyS: [0, -1, 0],
  KeyQ: [0, 0, 1],
  KeyE: [0, 0, -1],
};

export interface PoseSample {
  position: Vec3;
  grip: number;
}

export class SteerInput {
  readonly stepM: number;
  readonly maxHz: number;
  grip = 0.0;
  private readonly held = new Set<string>();
  private position: Vec3 = [0, 0, 0];
  private lastEmitMs = -Infinity;

  constructor(stepM = 0.001, maxHz = 60) {
    this.stepM = stepM;
    this.maxHz = maxHz;
  }

  keyDown(code: string): boolean {
    if (!(code in KEY_VECTORS)) return false;
    this.held.add(code);
    return true;
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  /** Sum of held key directions, each axis clamped to one step. */
  direction(): Vec3 {
    const d: Vec3 = [0, 0, 0];
    for (const code of this.held) {
      const v = KEY_VECTORS[code];
      d[0] += v[0];
      d[1] += v[1];
      d[2] += v[2];
    }
    return [
      Math.max(-1, Math.min(1, d[0])),
      Math.max(-1, Math.min(1, d[1])),
      Math.max(-1, Math.min(1, d[2])),
    ];
  }

  /**
   * Advance the commanded pose and return it, or null when there is
   * nothing to send (no keys held, or inside the rate cap).
   */
  sample(nowMs: number): PoseSample | null {
    if (this.held.size === 0) return null;
    if (nowMs - this.lastEmitMs < 1000 / this.maxHz) return null;
    this.lastEmitMs = nowMs;
    const d = this.direction();
    this.position = [
      this.position[0] + d[0] * this.stepM,
      this.position[1] + d[1] * this.stepM,
      this.position[2] + d[2] * this.stepM,
    ];
    return { position: [...this.position] as Vec3, grip: this.grip };
  }

  reset(): void {
    this.held.clear();
    this.position = [0, 0, 0];
    this.lastEmitMs = -Infinity;
  }
}
