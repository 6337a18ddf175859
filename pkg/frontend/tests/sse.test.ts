import { describe, expect, it } from "vitest";

import { EventStream, SseParser } from "../src/sse.js";
import type { EventRecord } from "../src/types.js";

function wireRecord(seq: number, kind: string): string {
  const record = { ts: "t", session_id: "s1", seq, kind, payload: {} };
  return `id: ${seq}\nevent: ${kind}\ndata: ${JSON.stringify(record)}\n\n`;
}

const KINDS = ["REQUEST", "REPORT", "PLAN", "IMAGE", "EVAL", "VERDICT", "DONE"];
const FULL_RUN = KINDS.map((kind, i) => wireRecord(i + 1, kind));

function streamResponse(chunks: string[], opts: { failAfter?: number } = {}): Response {
  const encoder = new TextEncoder();
  let sent = 0;
  const body = new ReadableStream<Uint8Array>({
    pull(controller) {
      if (opts.failAfter !== undefined && sent >= opts.failAfter) {
        controller.error(new Error("connection dropped"));
        return;
      }
      if (sent >= chunks.length) {
        controller.close();
        return;
      }
      controller.enqueue(encoder.encode(chunks[sent]));
      sent += 1;
    },
  });
  return new Response(body, { status: 200, headers: { "content-type": "text/event-stream" } });
}

describe("sse parser", () => {
  it("parses id/event/data blocks", () => {
    const parser = new SseParser();
    const messages = parser.feed('id: 3\nevent: EVAL\ndata: {"seq": 3}\n\n');
    expect(messages).toEqual([{ id: "3", event: "EVAL", data: '{"seq": 3}' }]);
  });

  it("handles chunks split mid-line", () => {
    const parser = new SseParser();
    expect(parser.feed("data: {\"se")).toEqual([]);
    expect(parser.feed('q": 1}\n')).toEqual([]);
    const messages = parser.feed("\n");
    expect(messages).toEqual([{ data: '{"seq": 1}' }]);
  });

  it("joins multi-line data", () => {
    const parser = new SseParser();
    const messages = parser.feed("data: a\ndata: b\n\n");
    expect(messages[0].data).toBe("a\nb");
  });
});

describe("event stream", () => {
  it("delivers a clean run in order and stops at DONE", async () => {
    const seen: number[] = [];
    const fetchImpl = (async () => streamResponse(FULL_RUN)) as typeof fetch;
    const stream = new EventStream("http://x/events", (r: EventRecord) => seen.push(r.seq), {
      fetchImpl,
      retryDelayMs: 1,
    });
    await stream.run();
    expect(seen).toEqual([1, 2, 3, 4, 5, 6, 7]);
  });

  it("reconnects after a drop with no duplicate and no missing events", async () => {
    let connection = 0;
    const fetchImpl = (async () => {
      connection += 1;
      // first connection dies after 4 chunks; the replay serves everything
      return connection === 1 ? streamResponse(FULL_RUN, { failAfter: 4 }) : streamResponse(FULL_RUN);
    }) as typeof fetch;
    const seen: number[] = [];
    const stream = new EventStream("http://x/events", (r: EventRecord) => seen.push(r.seq), {
      fetchImpl,
      retryDelayMs: 1,
    });
    await stream.run();
    expect(connection).toBe(2);
    expect(seen).toEqual([1, 2, 3, 4, 5, 6, 7]); // dedupe swallowed the replayed prefix
  });

  it("survives repeated drops at different offsets", async () => {
    for (let failAfter = 1; failAfter < FULL_RUN.length; failAfter++) {
      let connection = 0;
      const fetchImpl = (async () => {
        connection += 1;
        return connection === 1 ? streamResponse(FULL_RUN, { failAfter }) : streamResponse(FULL_RUN);
      }) as typeof fetch;
      const seen: number[] = [];
      const stream = new EventStream("http://x/events", (r: EventRecord) => seen.push(r.seq), {
        fetchImpl,
        retryDelayMs: 1,
      });
      await stream.run();
      expect(seen).toEqual([1, 2, 3, 4, 5, 6, 7]);
    }
  });

  it("stop() aborts without a terminal record", async () => {
    // a connection that never produces and rejects when aborted, like real fetch
    const endless = ((_url: RequestInfo | URL, init?: RequestInit) =>
      new Promise<Response>((_resolve, reject) => {
        init?.signal?.addEventListener("abort", () => reject(new Error("aborted")));
      })) as typeof fetch;
    const stream = new EventStream("http://x/events", () => undefined, {
      fetchImpl: endless,
      retryDelayMs: 1,
    });
    const running = stream.run();
    setTimeout(() => stream.stop(), 20);
    await running;
    expect(stream.lastSeq).toBe(0);
  });
});
