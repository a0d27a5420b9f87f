/**
 * Applies hub commands to the live page. Everything is reversible:
 * hiding is style-level (the element stays in the DOM, so presence is
 * unaffected), and show-only hides siblings along the ancestor chain
 * rather than detaching anything, which keeps host page scripts alive.
 */

import { resolveElementPath, resolveRelative } from './locator.js';
import type { MutationData, SessionCommandData, UIObjectData } from './protocol.js';

export interface ExecutorHooks {
  /** Resolve an object id to its element on this page, or null. */
  locate(objectId: string): Element | null;
  /** Perform a real navigation (overridable in tests). */
  navigate(url: string): void;
  /** Called after a mutation settles so presence can be re-reported. */
  afterMutation(): void;
}

export class CommandExecutor {
  private originalDisplay = new Map<Element, string>();
  private soloHidden = new Map<string, Element[]>();
  /** true while a remote mutation is being applied: input listeners must
   * not re-announce it as a local edit */
  applyingRemote = false;
  captureNavigation = new Set<string>();
  readonly applied: SessionCommandData[] = [];

  constructor(private doc: Document, private hooks: ExecutorHooks) {}

  apply(command: SessionCommandData): void {
    this.applied.push(command);
    const args = command.args;
    switch (command.action) {
      case 'Hide':
        this.hide(this.hooks.locate(args.objectId!));
        break;
      case 'Show': {
        this.show(this.hooks.locate(args.objectId!));
        this.undoSolo(args.objectId!);
        break;
      }
      case 'ShowOnly': {
        const el = this.hooks.locate(args.objectId!);
        if (el) this.showOnly(args.objectId!, el);
        if (args.captureNavigation) this.captureNavigation.add(args.objectId!);
        break;
      }
      case 'Navigate':
        this.hooks.navigate(args.url!);
        break;
      case 'ReplayEvent': {
        const event = args.event!;
        const root = this.hooks.locate(event.objectId);
        const target = root ? resolveRelative(root, event.relativeTargetPath) : null;
        if (target) this.replay(target, event.eventType, event.payload);
        break;
      }
      case 'ApplyMutation':
        this.applyMutation(args.mutation!);
        break;
      case 'OpenUrlWithObjects':
        // a full-page client realizes this as a navigation; the object
        // restriction is applied by whoever boots on the opened page
        this.hooks.navigate(args.url!);
        break;
      case 'ApplyEffect': {
        const el = this.hooks.locate(args.objectId!) as HTMLElement | null;
        if (!el) break;
        if (args.effect === 'Highlight') el.style.outline = '3px solid #f90';
        else if (args.effect === 'Hide') this.hide(el);
        else if (args.effect === 'Focus' && typeof el.focus === 'function') el.focus();
        break;
      }
      case 'MediaControl': {
        const root = this.hooks.locate(args.objectId!);
        if (!root) break;
        const media = root.matches('video,audio') ? root : root.querySelector('video,audio');
        root.setAttribute('data-media-state', args.verb === 'Play' ? 'playing' : 'stopped');
        const playable = media as HTMLMediaElement | null;
        try {
          if (playable && args.verb === 'Play' && typeof playable.play === 'function') void playable.play();
          if (playable && args.verb === 'Stop' && typeof playable.pause === 'function') playable.pause();
        } catch {
          // headless DOMs have no media pipeline; the attribute carries the state
        }
        break;
      }
    }
  }

  hide(el: Element | null): void {
    if (!el) return;
    const html = el as HTMLElement;
    if (!this.originalDisplay.has(el)) {
      this.originalDisplay.set(el, html.style.display);
    }
    html.style.display = 'none';
  }

  show(el: Element | null): void {
    if (!el) return;
    const html = el as HTMLElement;
    if (this.originalDisplay.has(el)) {
      html.style.display = this.originalDisplay.get(el)!;
      this.originalDisplay.delete(el);
    }
  }

  /** Hide every sibling along the chain from the element up to body. */
  showOnly(objectId: string, el: Element): void {
    this.undoSolo(objectId);
    this.show(el);
    const hidden: Element[] = [];
    let current: Element = el;
    while (current.parentElement && current !== this.doc.body) {
      for (const sibling of Array.from(current.parentElement.children)) {
        if (sibling !== current) {
          this.hide(sibling);
          hidden.push(sibling);
        }
      }
      current = current.parentElement;
    }
    this.soloHidden.set(objectId, hidden);
  }

  undoSolo(objectId: string): void {
    for (const el of this.soloHidden.get(objectId) ?? []) this.show(el);
    this.soloHidden.delete(objectId);
  }

  isVisible(el: Element): boolean {
    return (el as HTMLElement).style.display !== 'none';
  }

  private replay(target: Element, eventType: string, payload?: string): void {
    if (payload !== undefined && 'value' in target) {
      (target as HTMLInputElement).value = payload;
    }
    const win = this.doc.defaultView!;
    let event: Event;
    if (eventType === 'click') {
      event = new win.MouseEvent('click', { bubbles: true, cancelable: true });
    } else if (eventType === 'input') {
      event = new win.Event('input', { bubbles: true });
    } else {
      event = new win.Event(eventType, { bubbles: true });
    }
    target.dispatchEvent(event);
  }

  private applyMutation(mutation: MutationData): void {
    const root = this.hooks.locate(mutation.objectId);
    const target = root ? resolveRelative(root, mutation.relativeTargetPath) : null;
    if (!target) return;
    this.applyingRemote = true;
    try {
      if (mutation.newText !== undefined) {
        if ('value' in target) (target as HTMLTextAreaElement).value = mutation.newText;
        else target.textContent = mutation.newText;
      } else if (mutation.attribute) {
        target.setAttribute(mutation.attribute.name, mutation.attribute.value);
      }
      // fire the page's own handlers (auto-save and friends keep working)
      const win = this.doc.defaultView!;
      target.dispatchEvent(new win.Event('input', { bubbles: true }));
    } finally {
      this.applyingRemote = false;
    }
    this.hooks.afterMutation();
  }
}

/** Locate a collected object's element on the given document. */
export function locateObject(doc: Document, object: UIObjectData): Element | null {
  return resolveElementPath(doc, object.locator.elementPath);
}
