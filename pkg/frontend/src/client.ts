/**
 * The hub client: one session's view of the collection, presence
 * reporting, behaviour invocation and command execution.
 *
 * The hub cannot tell this client apart from a simulated session: it
 * speaks exactly the frames of docs/PROTOCOL.md over any Channel (a
 * browser WebSocket, the `ws` package in tests).
 */

import { CommandExecutor, locateObject } from './executor.js';
import { computeElementPath, resolveElementPath } from './locator.js';
import {
  Bindings,
  DescriptorMetaData,
  DeviceInfo,
  MutationData,
  PresenceRecordData,
  RuleData,
  SessionCommandData,
  SessionInfoData,
  Stereotype,
  UIObjectData,
  WireFrame,
  decodeFrame,
  encodeFrame,
  matchesPattern,
  normalizeUrl,
} from './protocol.js';

export interface Channel {
  send(text: string): void;
  onMessage(cb: (text: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

/** Wrap anything WebSocket-shaped (browser or `ws`) as a Channel. */
export function socketChannel(ws: {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, cb: (event: any) => void): void;
}): Channel {
  return {
    send: (text) => ws.send(text),
    onMessage: (cb) =>
      ws.addEventListener('message', (event: any) => {
        const data = event.data;
        cb(typeof data === 'string' ? data : data.toString('utf-8'));
      }),
    onClose: (cb) => ws.addEventListener('close', () => cb()),
    close: () => ws.close(),
  };
}

export interface PickerSelection {
  element: Element;
  locator: { urlPattern: string; elementPath: string };
  stereotype: Stereotype;
  name: string;
  tags: string[];
}

interface Pending {
  resolve(result: Record<string, unknown>): void;
  reject(err: Error): void;
}

export class HubClient {
  sessionId = '';
  token = '';
  objects = new Map<string, UIObjectData>();
  rules = new Map<string, RuleData>();
  records = new Map<string, PresenceRecordData>(); // "objectId|sessionId"
  sessions = new Map<string, SessionInfoData>();
  behaviours: DescriptorMetaData[] = [];
  errors: { code: string; message: string }[] = [];
  readonly executor: CommandExecutor;

  private seen = new Set<string>();
  private pending = new Map<string, Pending>();
  private msgN = 0;
  private presenceSeq = 0;
  private originSeqs = new Map<string, number>();
  private myPresence = new Map<string, 'Online' | 'Offline'>();
  private changeListeners: (() => void)[] = [];
  private welcomed: Pending | null = null;

  constructor(
    private channel: Channel,
    private win: Window,
    private clientName = 'web',
  ) {
    this.executor = new CommandExecutor(win.document, {
      locate: (objectId) => {
        const object = this.objects.get(objectId);
        return object ? locateObject(win.document, object) : null;
      },
      navigate: (url) => this.navigateTo(url),
      afterMutation: () => this.reportPresence(),
    });
    channel.onMessage((text) => this.deliver(text));
    this.attachEditListener();
  }

  // ---- outbound -----------------------------------------------------------

  private send(kind: WireFrame['kind'], payload: Record<string, unknown>): string {
    const msgId = `${this.clientName}-m${++this.msgN}`;
    this.channel.send(encodeFrame({ kind, msgId, payload }));
    return msgId;
  }

  private request(kind: WireFrame['kind'], payload: Record<string, unknown>): Promise<Record<string, unknown>> {
    const msgId = this.send(kind, payload);
    return new Promise((resolve, reject) => this.pending.set(msgId, { resolve, reject }));
  }

  login(userId: string, credentials: string, device: DeviceInfo): Promise<void> {
    this.send('Hello', { userId, credentials, device });
    return new Promise((resolve, reject) => {
      this.welcomed = { resolve: () => resolve(), reject };
    });
  }

  collect(selection: PickerSelection): Promise<UIObjectData> {
    return this.request('CollectObject', {
      locator: selection.locator,
      stereotype: selection.stereotype,
      name: selection.name,
      tags: [...selection.tags].sort(),
    }).then((result) => result['object'] as unknown as UIObjectData);
  }

  invoke(behaviourId: string, bindings: Bindings): Promise<Record<string, unknown>> {
    return this.request('InvokeBehaviour', { behaviourId, bindings });
  }

  saveRule(rule: RuleData): Promise<RuleData> {
    return this.request('UpdateObject', { rule }).then(
      (result) => result['rule'] as unknown as RuleData,
    );
  }

  deleteObject(objectId: string): Promise<Record<string, unknown>> {
    return this.request('DeleteObject', { objectId });
  }

  /** Re-resolve every owned locator and send one record per state change. */
  reportPresence(): void {
    if (!this.sessionId) return;
    const url = this.win.location.href;
    for (const object of [...this.objects.values()].sort((a, b) =>
      a.objectId < b.objectId ? -1 : 1,
    )) {
      const found = resolveElementPath(this.win.document, object.locator.elementPath) !== null;
      const state = found && matchesPattern(object.locator.urlPattern, url) ? 'Online' : 'Offline';
      if (this.myPresence.get(object.objectId) === state) continue;
      if (!this.myPresence.has(object.objectId) && state === 'Offline') {
        this.myPresence.set(object.objectId, state);
        continue; // never-online objects stay implicit
      }
      this.myPresence.set(object.objectId, state);
      const record: PresenceRecordData = {
        objectId: object.objectId,
        sessionId: this.sessionId,
        state,
        seq: ++this.presenceSeq,
      };
      this.applyRecord(record);
      this.send('PresenceUpdate', { scope: 'object', record });
    }
    this.notify();
  }

  announceUrl(): void {
    const info = this.sessions.get(this.sessionId);
    if (!info) return;
    const updated = { ...info, currentUrl: this.win.location.href };
    this.sessions.set(this.sessionId, updated);
    this.send('PresenceUpdate', { scope: 'session', event: 'url', session: updated });
  }

  navigateTo(url: string): void {
    // content scripts navigate the page; headless windows just update state
    try {
      this.win.location.href = url;
    } catch {
      /* some DOM implementations refuse; state below still advances */
    }
    this.announceUrl();
    this.reportPresence();
  }

  /** A user navigation intent: captured objects post it to the hub instead. */
  userNavigate(url: string): void {
    const capturing = [...this.executor.captureNavigation].sort();
    if (capturing.length > 0) {
      this.send('NavigationCommand', { objectId: capturing[0], url });
      return;
    }
    this.navigateTo(url);
  }

  /** Announce one local text edit inside a collected object. */
  sendEdit(objectId: string, relativeTargetPath: string, newText: string): void {
    const seq = (this.originSeqs.get(objectId) ?? 0) + 1;
    this.originSeqs.set(objectId, seq);
    const mutation: MutationData = {
      objectId,
      relativeTargetPath,
      originSeq: seq,
      newText,
    };
    this.send('ContentMutation', { mutation });
  }

  sendDomEvent(objectId: string, eventType: string, relativeTargetPath = '', payload?: string): void {
    const event: Record<string, unknown> = { objectId, eventType, relativeTargetPath };
    if (payload !== undefined) event['payload'] = payload;
    this.send('DomEvent', { event });
  }

  // ---- inbound ------------------------------------------------------------

  private deliver(text: string): void {
    const frame = decodeFrame(text);
    if (this.seen.has(frame.msgId)) return; // at-least-once delivery
    this.seen.add(frame.msgId);
    const payload = frame.payload as any;
    switch (frame.kind) {
      case 'Welcome': {
        this.sessionId = payload.sessionId;
        this.token = payload.token;
        this.objects = new Map(payload.objects.map((o: UIObjectData) => [o.objectId, o]));
        this.rules = new Map(payload.rules.map((r: RuleData) => [r.ruleId, r]));
        this.records = new Map(
          payload.ledger.map((r: PresenceRecordData) => [`${r.objectId}|${r.sessionId}`, r]),
        );
        this.sessions = new Map(
          payload.sessions.map((s: SessionInfoData) => [s.sessionId, s]),
        );
        this.behaviours = payload.behaviours;
        this.welcomed?.resolve({});
        this.welcomed = null;
        this.announceUrl();
        this.reportPresence();
        break;
      }
      case 'UpdateObject': {
        if (payload.object) {
          this.objects.set(payload.object.objectId, payload.object);
          this.reportPresence();
        } else if (payload.rule) {
          this.rules.set(payload.rule.ruleId, payload.rule);
        }
        break;
      }
      case 'DeleteObject': {
        if (payload.objectId) {
          this.objects.delete(payload.objectId);
          this.myPresence.delete(payload.objectId);
          for (const key of [...this.records.keys()]) {
            if (key.startsWith(payload.objectId + '|')) this.records.delete(key);
          }
        } else if (payload.ruleId) {
          this.rules.delete(payload.ruleId);
        }
        break;
      }
      case 'PresenceUpdate': {
        if (payload.scope === 'object') {
          this.applyRecord(payload.record);
        } else if (payload.event === 'left') {
          this.sessions.delete(payload.session.sessionId);
          for (const key of [...this.records.keys()]) {
            if (key.endsWith('|' + payload.session.sessionId)) this.records.delete(key);
          }
        } else {
          this.sessions.set(payload.session.sessionId, payload.session);
        }
        break;
      }
      case 'SessionCommand': {
        this.executor.apply(payload as SessionCommandData);
        break;
      }
      case 'Ack': {
        const result = payload.result ?? {};
        if (result.object) {
          this.objects.set(result.object.objectId, result.object);
          this.reportPresence();
        }
        if (result.rule) {
          this.rules.set(result.rule.ruleId, result.rule);
        }
        const pending = this.pending.get(payload.inReplyTo);
        if (pending) {
          this.pending.delete(payload.inReplyTo);
          pending.resolve(result);
        }
        break;
      }
      case 'Error': {
        this.errors.push({ code: payload.code, message: payload.message });
        const pending = payload.inReplyTo ? this.pending.get(payload.inReplyTo) : null;
        if (pending) {
          this.pending.delete(payload.inReplyTo);
          pending.reject(new Error(`${payload.code}: ${payload.message}`));
        } else if (this.welcomed) {
          this.welcomed.reject(new Error(`${payload.code}: ${payload.message}`));
          this.welcomed = null;
        }
        break;
      }
    }
    this.notify();
  }

  private applyRecord(record: PresenceRecordData): void {
    const key = `${record.objectId}|${record.sessionId}`;
    const current = this.records.get(key);
    if (current && record.seq <= current.seq) return; // last-seq-wins
    this.records.set(key, record);
  }

  isOnline(objectId: string, sessionId: string): boolean {
    return this.records.get(`${objectId}|${sessionId}`)?.state === 'Online';
  }

  // ---- local edit capture ---------------------------------------------------

  /** Watch input events inside collected objects and mirror them out. */
  private attachEditListener(): void {
    this.win.document.addEventListener('input', (event) => {
      if (this.executor.applyingRemote) return; // remote writes are not edits
      const target = event.target as Element | null;
      if (!target) return;
      for (const object of this.objects.values()) {
        const root = locateObject(this.win.document, object);
        if (root && (root === target || root.contains(target))) {
          const text =
            'value' in target ? (target as HTMLInputElement).value : target.textContent ?? '';
          this.sendEdit(object.objectId, relativePathTo(root, target), text);
          this.reportPresence();
          break;
        }
      }
    });
  }

  onChange(cb: () => void): void {
    this.changeListeners.push(cb);
  }

  private notify(): void {
    for (const cb of this.changeListeners) cb();
  }

  close(): void {
    this.channel.close();
  }
}

function relativePathTo(root: Element, target: Element): string {
  if (root === target) return '';
  const parts: number[] = [];
  let current: Element | null = target;
  while (current && current !== root) {
    const parent: Element | null = current.parentElement;
    if (!parent) return '';
    parts.unshift(Array.from(parent.children).indexOf(current));
    current = parent;
  }
  return '/' + parts.join('/');
}

export function makeSelection(
  el: Element,
  stereotype: Stereotype,
  name: string,
  tags: string[] = [],
  urlPattern?: string,
): PickerSelection {
  const doc = el.ownerDocument;
  return {
    element: el,
    locator: {
      urlPattern: urlPattern ?? normalizeUrl(doc.defaultView!.location.href),
      elementPath: computeElementPath(el),
    },
    stereotype,
    name,
    tags,
  };
}
