import { ApiError, NetworkError, StudyApi } from "./api.js";
import {
  canSubmit,
  likertValid,
  votePayload,
  type Selection,
} from "./state.js";
import {
  renderDone,
  renderError,
  renderExpired,
  renderPair,
  renderSaving,
  renderWelcome,
} from "./render.js";
import type { PairPayload, Side } from "./types.js";

const STORE_KEY = "rater-session";

interface StoredSession {
  session_id: string;
  expires_at: number;
}

export interface AppOptions {
  root: HTMLElement;
  api: StudyApi;
  storage?: Storage;
  /** Submission retries on network failure (idempotent server-side). */
  retries?: number;
  retryDelayMs?: number;
}

/**
 * Session controller: welcome -> pair screens -> completion, with no
 * back-navigation. Every async action chains onto an internal promise so
 * tests can `await app.idle()` after dispatching DOM events.
 */
export class App {
  private readonly root: HTMLElement;
  private readonly api: StudyApi;
  private readonly storage: Storage | undefined;
  private readonly retries: number;
  private readonly retryDelayMs: number;

  private sessionId: string | null = null;
  private expiresAt: number | undefined;
  private pair: PairPayload | null = null;
  private sel: Selection = {};
  private submitting = false;
  private chain: Promise<void> = Promise.resolve();

  constructor(opts: AppOptions) {
    this.root = opts.root;
    this.api = opts.api;
    this.storage = opts.storage;
    this.retries = opts.retries ?? 3;
    this.retryDelayMs = opts.retryDelayMs ?? 500;
    this.root.addEventListener("keydown", (ev) => this.onKey(ev as KeyboardEvent));
  }

  /** Resolves when every action dispatched so far has settled. */
  idle(): Promise<void> {
    return this.chain;
  }

  private enqueue(work: () => Promise<void>): void {
    this.chain = this.chain.then(work).catch((e) => this.fail(e));
  }

  /** Entry point: resume a stored session or show the welcome form. */
  boot(prefillStudy = ""): void {
    const stored = this.loadStored();
    if (stored) {
      this.sessionId = stored.session_id;
      this.expiresAt = stored.expires_at;
      this.enqueue(() => this.advance());
      return;
    }
    renderWelcome(
      this.root,
      { onStart: (study, rater) => this.start(study, rater) },
      prefillStudy,
    );
  }

  start(studyId: string, raterId: string): void {
    this.enqueue(async () => {
      const info = await this.api.createSession(studyId, raterId);
      this.sessionId = info.session_id;
      this.expiresAt = info.expires_at;
      this.saveStored({
        session_id: info.session_id,
        expires_at: info.expires_at,
      });
      await this.advance();
    });
  }

  choose(side: Side): void {
    if (!this.pair || this.submitting) return;
    this.sel = { ...this.sel, side };
    this.renderCurrent();
  }

  setLikert(value: number): void {
    if (!this.pair || this.submitting) return;
    if (!this.pair.requires_likert || !likertValid(value)) return;
    this.sel = { ...this.sel, likert: value };
    this.renderCurrent();
  }

  confirm(): void {
    if (!this.pair || this.submitting) return;
    if (!canSubmit(this.pair, this.sel)) return;
    const pair = this.pair;
    const body = votePayload(pair, this.sel);
    this.submitting = true;
    renderSaving(this.root);
    this.enqueue(async () => {
      try {
        await this.submitWithRetry(body);
      } finally {
        this.submitting = false;
      }
      await this.advance();
    });
  }

  /**
   * Votes are idempotent server-side: if a retry answers "already voted"
   * the first attempt landed, so the session simply moves on.
   */
  private async submitWithRetry(body: {
    pair_id: string;
    side: Side;
    likert?: number;
  }): Promise<void> {
    const sid = this.sessionId as string;
    for (let attempt = 0; ; attempt++) {
      try {
        await this.api.submitVote(sid, body);
        return;
      } catch (e) {
        if (e instanceof ApiError && e.status === 409) return;
        if (e instanceof NetworkError && attempt < this.retries) {
          await new Promise((r) => setTimeout(r, this.retryDelayMs));
          continue;
        }
        throw e;
      }
    }
  }

  private async advance(): Promise<void> {
    const sid = this.sessionId as string;
    const next = await this.api.nextPair(sid);
    if (next.done) {
      this.pair = null;
      this.clearStored();
      renderDone(this.root, next.total);
      return;
    }
    // decode ahead of the swap so the screen never shows a blank pane
    for (const b64 of [next.left_png_b64, next.right_png_b64]) {
      const img = new Image();
      img.src = `data:image/png;base64,${b64}`;
    }
    this.pair = next;
    this.sel = {};
    this.renderCurrent();
  }

  private renderCurrent(): void {
    if (!this.pair) return;
    renderPair(
      this.root,
      this.pair,
      this.sel,
      {
        onChoose: (side) => this.choose(side),
        onLikert: (v) => this.setLikert(v),
        onConfirm: () => this.confirm(),
      },
      this.expiresAt,
    );
  }

  private onKey(ev: KeyboardEvent): void {
    if (!this.pair) return;
    if (ev.key === "ArrowLeft") this.choose("left");
    else if (ev.key === "ArrowRight") this.choose("right");
    else if (ev.key >= "1" && ev.key <= "5") this.setLikert(Number(ev.key));
    else if (ev.key === "Enter" && !this.submitting) this.confirm();
    else return;
    ev.preventDefault();
  }

  private fail(e: unknown): void {
    this.pair = null;
    if (e instanceof ApiError && e.status === 410) {
      this.clearStored();
      renderExpired(this.root);
      return;
    }
    const message =
      e instanceof ApiError
        ? e.detail
        : e instanceof NetworkError
          ? "The study server is unreachable. Check the connection and retry."
          : String(e);
    renderError(this.root, message, () => {
      this.enqueue(() => this.advance());
    });
  }

  private loadStored(): StoredSession | null {
    if (!this.storage) return null;
    const raw = this.storage.getItem(STORE_KEY);
    if (!raw) return null;
    try {
      const parsed = JSON.parse(raw) as StoredSession;
      return parsed.session_id ? parsed : null;
    } catch {
      return null;
    }
  }

  private saveStored(s: StoredSession): void {
    this.storage?.setItem(STORE_KEY, JSON.stringify(s));
  }

  private clearStored(): void {
    this.storage?.removeItem(STORE_KEY);
  }
}
