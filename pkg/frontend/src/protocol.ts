/**
 * Wire protocol types and canonical framing, mirroring docs/PROTOCOL.md.
 *
 * One frame is one canonical JSON document (sorted keys, compact
 * separators). The hub validates strictly, so everything sent from here
 * follows the documented schemas bit for bit.
 */

export type Stereotype =
  | 'Generic' | 'Image' | 'ImageCollection' | 'Text'
  | 'Form' | 'Video' | 'Container' | 'Page';

export type DeviceKind = 'Desktop' | 'Mobile' | 'Tablet' | 'Other';

export interface DeviceInfo {
  deviceId: string;
  kind: DeviceKind;
  label: string;
}

export interface LocatorData {
  urlPattern: string;
  elementPath: string;
}

export interface UIObjectData {
  objectId: string;
  owner: string;
  name: string;
  tags: string[];
  stereotype: Stereotype;
  locator: LocatorData;
  enabledBehaviours: string[];
  createdAt: number;
}

export interface PresenceRecordData {
  objectId: string;
  sessionId: string;
  state: 'Online' | 'Offline';
  seq: number;
}

export interface SessionInfoData {
  sessionId: string;
  userId: string;
  device: DeviceInfo;
  currentUrl: string;
}

export interface ParamSpecData {
  name: string;
  kind: 'SessionRef' | 'DeviceRef' | 'ObjectRef' | 'Text' | 'Enum';
  required: boolean;
  repeated: boolean;
  options?: string[];
}

export interface DescriptorMetaData {
  behaviourId: string;
  displayName: string;
  applicability: 'agnostic' | Stereotype[];
  params: ParamSpecData[];
}

export interface BoundValueData {
  kind: 'session' | 'device' | 'object' | 'text' | 'enum' | 'selector';
  value: string | string[];
}

export type Bindings = Record<string, BoundValueData>;

export type SelectorData =
  | { type: 'exact'; sessionId: string }
  | { type: 'onDevice'; deviceId: string }
  | { type: 'deviceKind'; kind: DeviceKind }
  | { type: 'any' }
  | { type: 'secondSessionSameDevice'; of: string };

export type PredicateData =
  | { type: 'objectOnlineIn'; objectId: string; selector: string }
  | { type: 'objectOfflineIn'; objectId: string; selector: string }
  | { type: 'sessionsSameDevice'; a: string; b: string };

export interface RuleActionData {
  behaviourId: string;
  bindings: Bindings;
}

export interface RuleData {
  ruleId: string;
  owner: string;
  selectors: Record<string, SelectorData>;
  condition: PredicateData[];
  actions: RuleActionData[];
  enabled: boolean;
}

export interface DomEventData {
  objectId: string;
  eventType: string;
  relativeTargetPath: string;
  payload?: string;
}

export interface MutationData {
  objectId: string;
  relativeTargetPath: string;
  originSeq: number;
  newText?: string;
  attribute?: { name: string; value: string };
}

export type CommandAction =
  | 'Hide' | 'Show' | 'ShowOnly' | 'Navigate' | 'ReplayEvent'
  | 'ApplyMutation' | 'OpenUrlWithObjects' | 'ApplyEffect' | 'MediaControl';

export interface SessionCommandData {
  target: string;
  action: CommandAction;
  args: {
    objectId?: string;
    url?: string;
    event?: DomEventData;
    mutation?: MutationData;
    effect?: 'Highlight' | 'Hide' | 'Focus';
    verb?: 'Play' | 'Stop';
    objectIds?: string[];
    captureNavigation?: boolean;
  };
}

export type Kind =
  | 'Hello' | 'Welcome' | 'CollectObject' | 'UpdateObject' | 'DeleteObject'
  | 'PresenceUpdate' | 'InvokeBehaviour' | 'SessionCommand' | 'DomEvent'
  | 'NavigationCommand' | 'ContentMutation' | 'UploadBehaviour'
  | 'FetchBehaviour' | 'Ack' | 'Error';

export interface WireFrame {
  kind: Kind;
  msgId: string;
  payload: Record<string, unknown>;
  serverSeq?: number;
}

/** JSON.stringify with recursively sorted keys: the canonical encoding. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== 'object') {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return '[' + value.map(canonicalJson).join(',') + ']';
  }
  const entries = Object.entries(value as Record<string, unknown>)
    .filter(([, v]) => v !== undefined)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([k, v]) => JSON.stringify(k) + ':' + canonicalJson(v));
  return '{' + entries.join(',') + '}';
}

export function encodeFrame(frame: WireFrame): string {
  return canonicalJson(frame);
}

export function decodeFrame(text: string): WireFrame {
  const doc = JSON.parse(text);
  if (typeof doc !== 'object' || doc === null || typeof doc.kind !== 'string'
      || typeof doc.msgId !== 'string' || typeof doc.payload !== 'object') {
    throw new Error('malformed frame');
  }
  return doc as WireFrame;
}

/** Normalize to scheme://host/path, dropping query and fragment. */
export function normalizeUrl(url: string): string {
  try {
    const u = new URL(url);
    return `${u.protocol}//${u.host}${u.pathname || '/'}`;
  } catch {
    return url;
  }
}

/** Glob match over the normalized URL: `*` any run, `?` one char, `[…]` class. */
export function matchesPattern(pattern: string, url: string): boolean {
  let re = '';
  for (let i = 0; i < pattern.length; i++) {
    const c = pattern[i];
    if (c === '*') re += '.*';
    else if (c === '?') re += '.';
    else if (c === '[') {
      let j = i + 1;
      if (pattern[j] === '!') j++;
      if (pattern[j] === ']') j++;
      while (j < pattern.length && pattern[j] !== ']') j++;
      if (j >= pattern.length) {
        re += '\\[';
      } else {
        let cls = pattern.slice(i + 1, j);
        if (cls.startsWith('!')) cls = '^' + cls.slice(1);
        re += '[' + cls.replace(/\\/g, '\\\\') + ']';
        i = j;
      }
    } else {
      re += c.replace(/[.+^${}()|\\\/\]]/g, '\\$&');
    }
  }
  return new RegExp(`^${re}$`).test(normalizeUrl(url));
}
