import { describe, expect, test } from 'vitest';

import { canonicalJson, decodeFrame, encodeFrame, matchesPattern, normalizeUrl } from '../src/protocol.js';

describe('canonical framing', () => {
  test('keys are sorted recursively and compactly', () => {
    const text = canonicalJson({ b: 1, a: { z: [2, { y: 0, x: 1 }], k: 'v' } });
    expect(text).toBe('{"a":{"k":"v","z":[2,{"x":1,"y":0}]},"b":1}');
  });

  test('frames round-trip', () => {
    const frame = {
      kind: 'NavigationCommand' as const,
      msgId: 'web-m1',
      payload: { objectId: 'o1', url: 'https://x.example/next' },
    };
    expect(decodeFrame(encodeFrame(frame))).toEqual(frame);
  });

  test('undefined fields are omitted, matching the hub schemas', () => {
    expect(canonicalJson({ a: 1, b: undefined })).toBe('{"a":1}');
  });

  test('garbage is rejected', () => {
    expect(() => decodeFrame('{"nope":1}')).toThrow();
  });
});

describe('url patterns', () => {
  test('normalization strips query and fragment', () => {
    expect(normalizeUrl('https://en.wikipedia.org/wiki/Toulouse?x=1#History'))
      .toBe('https://en.wikipedia.org/wiki/Toulouse');
  });

  test('wildcards match like the hub', () => {
    expect(matchesPattern('https://en.wikipedia.org/wiki/*', 'https://en.wikipedia.org/wiki/Toulouse')).toBe(true);
    expect(matchesPattern('https://en.wikipedia.org/wiki/*', 'https://vimeo.com/')).toBe(false);
    expect(matchesPattern('https://mail.example/inbox', 'https://mail.example/inbox?tab=2')).toBe(true);
    expect(matchesPattern('https://video.example/*', 'https://video.example/v1')).toBe(true);
    expect(matchesPattern('https://video.example/v?', 'https://video.example/v1')).toBe(true);
    expect(matchesPattern('https://video.example/v[12]', 'https://video.example/v3')).toBe(false);
  });
});
