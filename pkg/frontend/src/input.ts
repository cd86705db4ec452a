// Keyboard mapping: arrows move/jump/guard, Z punch, X kick, C special.
// The held-keys set resolves to exactly one action code per client frame;
// attacks win over movement so mashing feels responsive.

export const ACTION = {
  idle: 0,
  moveLeft: 1,
  moveRight: 2,
  jump: 3,
  guard: 4,
  punch: 5,
  kick: 6,
  special: 7,
} as const;

export const KEY_BINDINGS: Record<string, number> = {
  ArrowLeft: ACTION.moveLeft,
  ArrowRight: ACTION.moveRight,
  ArrowUp: ACTION.jump,
  ArrowDown: ACTION.guard,
  KeyZ: ACTION.punch,
  KeyX: ACTION.kick,
  KeyC: ACTION.special,
};

// highest priority first
const PRIORITY = [
  ACTION.special,
  ACTION.kick,
  ACTION.punch,
  ACTION.guard,
  ACTION.jump,
  ACTION.moveLeft,
  ACTION.moveRight,
];

export function resolveAction(heldCodes: ReadonlySet<string>): number {
  const active = new Set<number>();
  for (const code of heldCodes) {
    const action = KEY_BINDINGS[code];
    if (action !== undefined) active.add(action);
  }
  for (const action of PRIORITY) {
    if (active.has(action)) return action;
  }
  return ACTION.idle;
}

export class KeyTracker {
  readonly held = new Set<string>();

  down(code: string): void {
    this.held.add(code);
  }

  up(code: string): void {
    this.held.delete(code);
  }

  clear(): void {
    this.held.clear();
  }

  current(): number {
    return resolveAction(this.held);
  }
}
