// Server-sent-events reader built on streaming fetch so the same code runs
// in the browser and under node tests. The server replays the whole session
// log from seq 1 on every (re)connect; consumers stay consistent because
// records are deduplicated by seq before they reach the callback.

import type { EventRecord } from "./types.js";

export interface SseMessage {
  id?: string;
  event?: string;
  data: string;
}

/** Incremental text/event-stream parser: feed chunks, get complete messages. */
export class SseParser {
  private buffer = "";

  feed(chunk: string): SseMessage[] {
    this.buffer += chunk.replace(/\r\n/g, "\n");
    const messages: SseMessage[] = [];
    let boundary = this.buffer.indexOf("\n\n");
    while (boundary >= 0) {
      const block = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const message: SseMessage = { data: "" };
      const dataLines: string[] = [];
      for (const line of block.split("\n")) {
        if (line.startsWith("data:")) dataLines.push(line.slice(5).trimStart());
        else if (line.startsWith("event:")) message.event = line.slice(6).trim();
        else if (line.startsWith("id:")) message.id = line.slice(3).trim();
      }
      message.data = dataLines.join("\n");
      if (message.data || message.event) messages.push(message);
      boundary = this.buffer.indexOf("\n\n");
    }
    return messages;
  }
}

export interface EventStreamOptions {
  fetchImpl?: typeof fetch;
  retryDelayMs?: number;
  maxRetries?: number;
}

const TERMINAL_KINDS = new Set(["DONE"]);

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Tails a session's event stream. Reconnects with backoff on drops,
 * resuming cleanly because duplicate seqs are filtered out. Resolves when
 * a terminal record arrives, the stream ends after one, or stop() is called.
 */
export class EventStream {
  lastSeq = 0;
  private stopped = false;
  private controller: AbortController | null = null;
  private sawTerminal = false;

  constructor(
    private url: string,
    private onRecord: (record: EventRecord) => void,
    private options: EventStreamOptions = {},
  ) {}

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  /** Sever the current connection without stopping; run() reconnects. */
  dropConnection(): void {
    this.controller?.abort();
  }

  async run(): Promise<void> {
    const fetchImpl = this.options.fetchImpl ?? fetch;
    const retryDelay = this.options.retryDelayMs ?? 250;
    let attempts = 0;
    while (!this.stopped && !this.sawTerminal) {
      this.controller = new AbortController();
      try {
        const response = await fetchImpl(this.url, {
          signal: this.controller.signal,
          headers: { Accept: "text/event-stream" },
        });
        if (!response.ok || !response.body) throw new Error(`stream failed: ${response.status}`);
        attempts = 0;
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const message of parser.feed(decoder.decode(value, { stream: true }))) {
            this.handle(message);
            if (this.sawTerminal) return;
          }
        }
      } catch {
        // fall through to retry
      }
      if (this.stopped || this.sawTerminal) return;
      attempts += 1;
      if (this.options.maxRetries !== undefined && attempts > this.options.maxRetries) {
        throw new Error("event stream: retry budget exhausted");
      }
      await sleep(retryDelay * Math.min(attempts, 8));
    }
  }

  private handle(message: SseMessage): void {
    if (!message.data) return;
    let record: EventRecord;
    try {
      record = JSON.parse(message.data) as EventRecord;
    } catch {
      return;
    }
    if (typeof record.seq !== "number" || record.seq <= this.lastSeq) return; // dedupe on replay
    this.lastSeq = record.seq;
    this.onRecord(record);
    if (TERMINAL_KINDS.has(record.kind)) this.sawTerminal = true;
  }
}
