/**
 * The collection sidebar: every object with per-session online badges, a
 * behaviour menu per object (exactly the hub-reported applicable
 * descriptors), the rule list and the device/session directory.
 */

import type { HubClient } from './client.js';
import { Bindings, DescriptorMetaData, UIObjectData } from './protocol.js';

export class Sidebar {
  readonly root: HTMLElement;

  constructor(private doc: Document, private client: HubClient) {
    this.root = doc.createElement('aside');
    this.root.id = 'duihub-sidebar';
    client.onChange(() => this.render());
  }

  mount(parent: Element): void {
    parent.appendChild(this.root);
    this.render();
  }

  applicableFor(object: UIObjectData): DescriptorMetaData[] {
    return this.client.behaviours.filter(
      (d) => d.applicability === 'agnostic' || d.applicability.includes(object.stereotype),
    );
  }

  render(): void {
    this.root.textContent = '';
    this.renderObjects();
    this.renderRules();
    this.renderSessions();
  }

  private renderObjects(): void {
    const list = this.doc.createElement('ul');
    list.id = 'duihub-objects';
    for (const object of [...this.client.objects.values()].sort((a, b) =>
      a.objectId < b.objectId ? -1 : 1,
    )) {
      const item = this.doc.createElement('li');
      item.setAttribute('data-object', object.objectId);
      const title = this.doc.createElement('span');
      title.className = 'duihub-name';
      title.textContent = `${object.name} [${object.stereotype}]`;
      item.appendChild(title);
      for (const session of [...this.client.sessions.values()].sort((a, b) =>
        a.sessionId < b.sessionId ? -1 : 1,
      )) {
        const badge = this.doc.createElement('span');
        const online = this.client.isOnline(object.objectId, session.sessionId);
        badge.className = online ? 'duihub-badge online' : 'duihub-badge offline';
        badge.setAttribute('data-session', session.sessionId);
        badge.textContent = online ? '●' : '○';
        badge.title = `${session.device.label || session.device.kind}: ${online ? 'online' : 'offline'}`;
        item.appendChild(badge);
      }
      item.appendChild(this.menuFor(object));
      list.appendChild(item);
    }
    this.root.appendChild(list);
  }

  private renderRules(): void {
    const list = this.doc.createElement('ul');
    list.id = 'duihub-rules';
    for (const rule of this.client.rules.values()) {
      const item = this.doc.createElement('li');
      item.setAttribute('data-rule', rule.ruleId);
      const actions = rule.actions.map((a) => a.behaviourId).join(', ');
      item.textContent = `${rule.ruleId}: ${rule.condition.length} condition(s) -> ${actions}` +
        (rule.enabled ? '' : ' (disabled)');
      list.appendChild(item);
    }
    this.root.appendChild(list);
  }

  private renderSessions(): void {
    const list = this.doc.createElement('ul');
    list.id = 'duihub-sessions';
    for (const session of [...this.client.sessions.values()].sort((a, b) =>
      a.sessionId < b.sessionId ? -1 : 1,
    )) {
      const item = this.doc.createElement('li');
      item.setAttribute('data-session', session.sessionId);
      const marker = session.sessionId === this.client.sessionId ? ' (this one)' : '';
      item.textContent = `${session.device.label || session.device.kind} · ${session.device.deviceId}` +
        ` · ${session.sessionId}${marker}`;
      list.appendChild(item);
    }
    this.root.appendChild(list);
  }

  /** The gear menu: one entry per applicable behaviour. */
  private menuFor(object: UIObjectData): HTMLElement {
    const menu = this.doc.createElement('ul');
    menu.className = 'duihub-menu';
    for (const descriptor of this.applicableFor(object)) {
      const entry = this.doc.createElement('li');
      entry.setAttribute('data-behaviour', descriptor.behaviourId);
      entry.textContent = descriptor.displayName;
      entry.addEventListener('click', () => {
        const form = this.parameterForm(object, descriptor);
        this.root.appendChild(form);
      });
      menu.appendChild(entry);
    }
    return menu;
  }

  /** Render the parameter form a descriptor declares, without knowing it. */
  parameterForm(object: UIObjectData, descriptor: DescriptorMetaData): HTMLFormElement {
    const form = this.doc.createElement('form');
    form.className = 'duihub-params';
    form.setAttribute('data-behaviour', descriptor.behaviourId);
    for (const param of descriptor.params) {
      const label = this.doc.createElement('label');
      label.textContent = param.name + (param.required ? ' *' : '');
      let field: HTMLElement;
      if (param.kind === 'SessionRef') {
        field = this.select(param.name, [...this.client.sessions.values()].map((s) => ({
          value: s.sessionId,
          label: `${s.device.label || s.device.kind} (${s.sessionId})`,
        })));
      } else if (param.kind === 'DeviceRef') {
        const seen = new Map<string, string>();
        for (const s of this.client.sessions.values()) {
          seen.set(s.device.deviceId, s.device.label || s.device.kind);
        }
        field = this.select(param.name, [...seen.entries()].map(([value, label]) => ({ value, label })));
      } else if (param.kind === 'ObjectRef') {
        field = this.select(param.name, [...this.client.objects.values()].map((o) => ({
          value: o.objectId,
          label: o.name,
        })), param.repeated);
      } else if (param.kind === 'Enum') {
        field = this.select(param.name, (param.options ?? []).map((o) => ({ value: o, label: o })));
      } else {
        const input = this.doc.createElement('input');
        input.setAttribute('name', param.name);
        field = input;
      }
      label.appendChild(field);
      form.appendChild(label);
    }
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      void this.client.invoke(descriptor.behaviourId, this.readBindings(object, descriptor, form));
    });
    return form;
  }

  private select(
    name: string,
    options: { value: string; label: string }[],
    multiple = false,
  ): HTMLSelectElement {
    const select = this.doc.createElement('select');
    select.setAttribute('name', name);
    if (multiple) select.setAttribute('multiple', 'multiple');
    for (const option of options) {
      const el = this.doc.createElement('option');
      el.setAttribute('value', option.value);
      el.textContent = option.label;
      select.appendChild(el);
    }
    return select;
  }

  readBindings(
    object: UIObjectData,
    descriptor: DescriptorMetaData,
    form: HTMLFormElement,
  ): Bindings {
    const bindings: Bindings = {};
    for (const param of descriptor.params) {
      const field = form.querySelector(`[name="${param.name}"]`) as
        | HTMLInputElement
        | HTMLSelectElement
        | null;
      if (!field) continue;
      let raw: string | string[];
      if (field instanceof this.doc.defaultView!.HTMLSelectElement && field.multiple) {
        raw = [...field.selectedOptions].map((o) => o.value);
      } else {
        raw = field.value;
      }
      if (!raw || (Array.isArray(raw) && raw.length === 0)) {
        // the object the menu was opened from fills unanswered object params
        if (param.kind === 'ObjectRef') {
          raw = param.repeated ? [object.objectId] : object.objectId;
        } else if (!param.required) {
          continue;
        } else {
          continue;
        }
      }
      const kind =
        param.kind === 'SessionRef' ? 'session'
        : param.kind === 'DeviceRef' ? 'device'
        : param.kind === 'ObjectRef' ? 'object'
        : param.kind === 'Enum' ? 'enum'
        : 'text';
      bindings[param.name] = { kind, value: raw };
    }
    return bindings;
  }
}
