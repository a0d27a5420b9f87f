/**
 * Structural element paths shared with the hub's locator contract:
 * "/" is the document body, "/0/2" walks element-children indices, and
 * "#someid" anchors at the unique element with that id (optionally with a
 * child-index suffix, "#toc/1"). A path resolves to exactly one element or
 * to null, never ambiguously.
 */

export function computeElementPath(el: Element): string {
  const doc = el.ownerDocument;
  const body = doc.body;
  if (el === body) return '/';
  // prefer the nearest ancestor-or-self with a document-unique id
  let anchor: Element | null = el;
  const suffix: number[] = [];
  while (anchor && anchor !== body) {
    const id = (anchor as HTMLElement).id;
    if (id && doc.querySelectorAll(`[id="${cssEscape(id)}"]`).length === 1) {
      return '#' + id + (suffix.length ? '/' + suffix.join('/') : '');
    }
    const parent: Element | null = anchor.parentElement;
    if (!parent) break;
    suffix.unshift(indexAmongChildren(anchor));
    anchor = parent;
  }
  return '/' + suffix.join('/');
}

function indexAmongChildren(el: Element): number {
  let i = 0;
  let sibling = el.previousElementSibling;
  while (sibling) {
    i++;
    sibling = sibling.previousElementSibling;
  }
  return i;
}

function cssEscape(value: string): string {
  return value.replace(/["\\]/g, '\\$&');
}

export function resolveElementPath(doc: Document, path: string): Element | null {
  let node: Element | null = doc.body;
  let rest = path;
  if (path.startsWith('#')) {
    const slash = path.indexOf('/');
    const id = slash === -1 ? path.slice(1) : path.slice(1, slash);
    const hits = doc.querySelectorAll(`[id="${cssEscape(id)}"]`);
    if (hits.length !== 1) return null;
    node = hits[0];
    rest = slash === -1 ? '' : path.slice(slash);
  }
  if (rest === '' || rest === '/') return node;
  for (const part of rest.replace(/^\/|\/$/g, '').split('/')) {
    const index = Number(part);
    if (!Number.isInteger(index) || node === null) return null;
    node = node.children[index] ?? null;
  }
  return node;
}

/** Resolve a path relative to an already-located element ("" is itself). */
export function resolveRelative(el: Element, path: string): Element | null {
  if (path === '' || path === '/') return el;
  let node: Element | null = el;
  for (const part of path.replace(/^\/|\/$/g, '').split('/')) {
    const index = Number(part);
    if (!Number.isInteger(index) || node === null) return null;
    node = node.children[index] ?? null;
  }
  return node;
}
