import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { Window } from 'happy-dom';

const here = dirname(fileURLToPath(import.meta.url));

export type DomWindow = globalThis.Window & typeof globalThis;

/** A happy-dom window with a demo page loaded; inline scripts run. */
export function loadPage(file: string, url: string): DomWindow {
  const html = readFileSync(join(here, '..', 'demo', file), 'utf-8');
  const win = new Window({ url });
  win.document.write(html);
  return win as unknown as DomWindow;
}

export function emptyPage(url: string, bodyHtml = ''): DomWindow {
  const win = new Window({ url });
  win.document.write(`<!DOCTYPE html><html><body>${bodyHtml}</body></html>`);
  return win as unknown as DomWindow;
}

export async function until(cond: () => boolean, what = 'condition', ms = 5000): Promise<void> {
  const start = Date.now();
  while (!cond()) {
    if (Date.now() - start > ms) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 20));
  }
}
