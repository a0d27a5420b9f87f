/**
 * In-page element picker: hover to highlight, click to select, then a
 * small form chooses the widget kind, name and tags. The computed locator
 * re-resolves to the picked element on the unmodified page.
 */

import { makeSelection, PickerSelection } from './client.js';
import { computeElementPath, resolveElementPath } from './locator.js';
import type { Stereotype } from './protocol.js';

export function suggestStereotype(el: Element): Stereotype {
  const tag = el.tagName.toLowerCase();
  if (tag === 'body') return 'Page';
  if (tag === 'form' || el.querySelector('form') !== null) return 'Form';
  if (tag === 'video') return 'Video';
  if (tag === 'img') return 'Image';
  if (el.querySelectorAll('img').length > 1) return 'ImageCollection';
  if (tag === 'textarea' || tag === 'input' || tag === 'p' || tag === 'span') return 'Text';
  if (el.children.length > 0) return 'Container';
  return 'Generic';
}

export interface PickerSession {
  cancel(): void;
}

/**
 * Arm the picker. Resolves with the clicked element (stereotype suggested,
 * not yet confirmed) or null when cancelled with Escape.
 */
export function pickElement(doc: Document): Promise<Element | null> & { session: PickerSession } {
  const win = doc.defaultView!;
  const overlay = doc.createElement('div');
  overlay.id = 'duihub-picker-overlay';
  overlay.style.position = 'fixed';
  overlay.style.pointerEvents = 'none';
  overlay.style.border = '2px solid #2b6cb0';
  overlay.style.background = 'rgba(43,108,176,0.15)';
  overlay.style.display = 'none';
  overlay.style.zIndex = '2147483646';
  doc.body.appendChild(overlay);

  let resolveFn: (el: Element | null) => void;
  const done = new Promise<Element | null>((resolve) => {
    resolveFn = resolve;
  });

  const isOurs = (el: Element) => el.id.startsWith('duihub-');

  const onMove = (event: Event) => {
    const target = event.target as Element | null;
    if (!target || isOurs(target)) return;
    const rect = (target as HTMLElement).getBoundingClientRect?.();
    overlay.style.display = 'block';
    if (rect) {
      overlay.style.left = rect.left + 'px';
      overlay.style.top = rect.top + 'px';
      overlay.style.width = rect.width + 'px';
      overlay.style.height = rect.height + 'px';
    }
    overlay.setAttribute('data-highlighting', computeElementPath(target));
  };

  const finish = (el: Element | null) => {
    doc.removeEventListener('mousemove', onMove, true);
    doc.removeEventListener('click', onClick, true);
    doc.removeEventListener('keydown', onKey, true);
    overlay.remove();
    resolveFn(el);
  };

  const onClick = (event: Event) => {
    const target = event.target as Element | null;
    if (!target || isOurs(target)) return;
    event.preventDefault();
    event.stopPropagation();
    finish(target);
  };

  const onKey = (event: KeyboardEvent) => {
    if (event.key === 'Escape') finish(null);
  };

  doc.addEventListener('mousemove', onMove, true);
  doc.addEventListener('click', onClick, true);
  doc.addEventListener('keydown', onKey, true);

  const result = done as Promise<Element | null> & { session: PickerSession };
  result.session = { cancel: () => finish(null) };
  return result;
}

/** Confirm a picked element into a full selection, verifying re-resolution. */
export function confirmSelection(
  el: Element,
  options: { stereotype?: Stereotype; name: string; tags?: string[]; urlPattern?: string },
): PickerSelection {
  const selection = makeSelection(
    el,
    options.stereotype ?? suggestStereotype(el),
    options.name,
    options.tags ?? [],
    options.urlPattern,
  );
  const resolved = resolveElementPath(el.ownerDocument, selection.locator.elementPath);
  if (resolved !== el) {
    throw new Error(`locator ${selection.locator.elementPath} does not re-resolve to the picked element`);
  }
  return selection;
}
