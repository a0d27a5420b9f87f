/**
 * Boot script for the bundled demo pages: connects to the hub, mounts the
 * sidebar and wires a "collect" button to the picker.
 *
 * Configuration comes from the page URL: ?hub=ws://127.0.0.1:8750/sync
 * &user=max&pass=secret&device=deskpc&kind=Desktop&label=my%20desktop
 */

import { HubClient, socketChannel } from './client.js';
import { confirmSelection, pickElement, suggestStereotype } from './picker.js';
import { Sidebar } from './sidebar.js';
import type { DeviceKind } from './protocol.js';

export async function boot(win: Window): Promise<HubClient> {
  const params = new URLSearchParams(win.location.search);
  const hubUrl = params.get('hub') ?? 'ws://127.0.0.1:8750/sync';
  const ws = new (win as any).WebSocket(hubUrl);
  await new Promise<void>((resolve, reject) => {
    ws.addEventListener('open', () => resolve());
    ws.addEventListener('error', (e: unknown) => reject(e));
  });
  const client = new HubClient(socketChannel(ws), win, params.get('device') ?? 'web');
  await client.login(params.get('user') ?? 'demo', params.get('pass') ?? 'demo', {
    deviceId: params.get('device') ?? 'web-device',
    kind: (params.get('kind') as DeviceKind) ?? 'Desktop',
    label: params.get('label') ?? 'web client',
  });

  const sidebar = new Sidebar(win.document, client);
  sidebar.mount(win.document.body);

  const collectButton = win.document.createElement('button');
  collectButton.id = 'duihub-collect';
  collectButton.textContent = 'Collect element…';
  collectButton.addEventListener('click', async () => {
    const el = await pickElement(win.document);
    if (!el) return;
    const name = win.prompt?.('Name for this element?') || el.tagName.toLowerCase();
    const selection = confirmSelection(el, { name, stereotype: suggestStereotype(el) });
    await client.collect(selection);
    client.reportPresence();
  });
  win.document.body.appendChild(collectButton);
  return client;
}

declare const window: Window | undefined;
if (typeof window !== 'undefined' && (window as any).document?.readyState !== undefined) {
  const w = window as Window;
  if ((w as any).__duihubAutoboot !== false) {
    void boot(w).catch((err) => console.error('duihub boot failed:', err));
  }
}
