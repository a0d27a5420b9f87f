/**
 * Form model behind the rule editor: named session slots, an ordered,
 * reorderable condition list, and actions whose parameter fields are
 * loaded from the chosen behaviour's declared schema. Autofill draws on
 * the live collection and session directory.
 */

import type { HubClient } from './client.js';
import {
  Bindings,
  DescriptorMetaData,
  PredicateData,
  RuleActionData,
  RuleData,
  SelectorData,
} from './protocol.js';

export class RuleBuilder {
  selectors: Record<string, SelectorData> = {};
  condition: PredicateData[] = [];
  actions: { behaviourId: string; bindings: Bindings }[] = [];
  enabled = true;

  constructor(private client: HubClient) {}

  addSlot(name: string, selector: SelectorData): this {
    this.selectors[name] = selector;
    return this;
  }

  addCondition(predicate: PredicateData): this {
    this.condition.push(predicate);
    return this;
  }

  /** Drag-and-drop reordering of condition statements. */
  moveCondition(from: number, to: number): this {
    const [entry] = this.condition.splice(from, 1);
    this.condition.splice(to, 0, entry);
    return this;
  }

  /** The action section is loaded from the selected behaviour's schema. */
  actionFieldsFor(behaviourId: string): DescriptorMetaData | undefined {
    return this.client.behaviours.find((b) => b.behaviourId === behaviourId);
  }

  addAction(behaviourId: string, bindings: Bindings): this {
    const descriptor = this.actionFieldsFor(behaviourId);
    if (!descriptor) throw new Error(`unknown behaviour ${behaviourId}`);
    for (const param of descriptor.params) {
      if (param.required && !(param.name in bindings)) {
        throw new Error(`missing required parameter ${param.name}`);
      }
    }
    this.actions.push({ behaviourId, bindings });
    return this;
  }

  /** Autofill for "type to reference an object": name/tag prefix match. */
  autofillObjects(prefix: string): { objectId: string; label: string }[] {
    const needle = prefix.toLowerCase();
    return [...this.client.objects.values()]
      .filter(
        (o) =>
          o.name.toLowerCase().includes(needle) ||
          o.tags.some((t) => t.toLowerCase().includes(needle)),
      )
      .sort((a, b) => (a.objectId < b.objectId ? -1 : 1))
      .map((o) => ({ objectId: o.objectId, label: o.name }));
  }

  autofillSessions(prefix: string): { sessionId: string; label: string }[] {
    const needle = prefix.toLowerCase();
    return [...this.client.sessions.values()]
      .filter(
        (s) =>
          s.sessionId.toLowerCase().includes(needle) ||
          s.device.label.toLowerCase().includes(needle) ||
          s.device.kind.toLowerCase().includes(needle),
      )
      .sort((a, b) => (a.sessionId < b.sessionId ? -1 : 1))
      .map((s) => ({ sessionId: s.sessionId, label: `${s.device.label || s.device.kind} (${s.sessionId})` }));
  }

  build(owner: string): RuleData {
    if (this.condition.length === 0) throw new Error('a rule needs at least one condition');
    if (this.actions.length === 0) throw new Error('a rule needs at least one action');
    return {
      ruleId: '',
      owner,
      selectors: this.selectors,
      condition: this.condition,
      actions: this.actions as RuleActionData[],
      enabled: this.enabled,
    };
  }

  save(owner: string): Promise<RuleData> {
    return this.client.saveRule(this.build(owner));
  }
}
