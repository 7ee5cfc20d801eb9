import { SATD_CLASSES, type SatdClass } from "./types.js";

/**
 * Keyboard shortcuts for the labeling queue.
 *
 * 1-6 pick a class in declaration order, s skips the current item. Keys are
 * ignored while the focus sits in a text control, and when a modifier is
 * held, so shortcuts never swallow normal typing.
 */

export type KeyAction = { kind: "label"; label: SatdClass } | { kind: "skip" };

export function actionForKey(key: string): KeyAction | null {
  if (key.length === 1 && key >= "1" && key <= "6") {
    const label = SATD_CLASSES[Number(key) - 1];
    if (label) return { kind: "label", label };
  }
  if (key === "s" || key === "S") return { kind: "skip" };
  return null;
}

export interface KeyTargetLike {
  tagName?: string;
  isContentEditable?: boolean;
}

export interface KeyEventLike {
  key: string;
  ctrlKey?: boolean;
  metaKey?: boolean;
  altKey?: boolean;
  target?: KeyTargetLike | null;
}

export function isTextTarget(target: KeyTargetLike | null | undefined): boolean {
  if (!target || !target.tagName) return false;
  const tag = target.tagName.toUpperCase();
  if (tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT") return true;
  return target.isContentEditable === true;
}

export function actionForEvent(event: KeyEventLike): KeyAction | null {
  if (event.ctrlKey || event.metaKey || event.altKey) return null;
  if (isTextTarget(event.target)) return null;
  return actionForKey(event.key);
}

/** Build a keydown listener that forwards recognized shortcuts. */
export function bindAnnotationKeys(
  handle: (action: KeyAction) => void,
): (event: KeyboardEvent) => void {
  return (event) => {
    const action = actionForEvent({
      key: event.key,
      ctrlKey: event.ctrlKey,
      metaKey: event.metaKey,
      altKey: event.altKey,
      target: event.target as KeyTargetLike | null,
    });
    if (action) {
      event.preventDefault();
      handle(action);
    }
  };
}
