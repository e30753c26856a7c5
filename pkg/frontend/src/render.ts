import {
  canSubmit,
  LIKERT_LABELS,
  questionFor,
  type Selection,
} from "./state.js";
import type { PairPayload, Side } from "./types.js";

export interface PairHandlers {
  onChoose(side: Side): void;
  onLikert(value: number): void;
  onConfirm(): void;
}

export interface WelcomeHandlers {
  onStart(studyId: string, raterId: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function clear(root: HTMLElement): void {
  root.textContent = "";
}

export function renderWelcome(
  root: HTMLElement,
  handlers: WelcomeHandlers,
  prefillStudy = "",
): void {
  clear(root);
  root.append(el("h1", {}, "Image rating study"));
  root.append(
    el(
      "p",
      {},
      "You will see pairs of CT slices side by side. For each pair, " +
        "pick one image, rate the difficulty where asked, and confirm. " +
        "The study is completed in one uninterrupted sitting.",
    ),
  );
  const form = el("form", { class: "welcome" });
  const studyLabel = el("label", {}, "Study code");
  const studyInput = el("input", {
    name: "study",
    required: "",
    value: prefillStudy,
    autocomplete: "off",
  });
  studyLabel.append(studyInput);
  const raterLabel = el("label", {}, "Rater id");
  const raterInput = el("input", {
    name: "rater",
    required: "",
    autocomplete: "off",
  });
  raterLabel.append(raterInput);
  const button = el("button", { class: "primary", type: "submit" }, "Begin");
  form.append(studyLabel, raterLabel, button);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const study = studyInput.value.trim();
    const rater = raterInput.value.trim();
    if (study && rater) handlers.onStart(study, rater);
  });
  root.append(form);
}

function pane(
  side: Side,
  pngB64: string,
  chosen: boolean,
  onChoose: (side: Side) => void,
): HTMLElement {
  const button = el("button", {
    class: "pane",
    type: "button",
    "data-side": side,
    "aria-pressed": chosen ? "true" : "false",
    "aria-label": side === "left" ? "choose left image" : "choose right image",
  });
  const img = el("img", {
    src: `data:image/png;base64,${pngB64}`,
    alt: side === "left" ? "left image" : "right image",
    draggable: "false",
  });
  button.append(img);
  button.addEventListener("click", () => onChoose(side));
  return button;
}

export function renderPair(
  root: HTMLElement,
  pair: PairPayload,
  sel: Selection,
  handlers: PairHandlers,
  expiresAt?: number,
): void {
  clear(root);
  root.append(
    el(
      "p",
      { class: "progress" },
      `Pair ${pair.index + 1} of ${pair.total}`,
    ),
  );
  root.append(el("p", { class: "question" }, questionFor(pair)));

  const panes = el("div", { class: "panes" });
  panes.append(
    pane("left", pair.left_png_b64, sel.side === "left", handlers.onChoose),
    pane("right", pair.right_png_b64, sel.side === "right", handlers.onChoose),
  );
  root.append(panes);
  root.append(
    el(
      "p",
      { class: "caption" },
      `${pair.plane} plane, slice ${pair.slice_index}`,
    ),
  );

  if (pair.requires_likert) {
    const fs = el("fieldset", { class: "likert" });
    fs.append(el("legend", {}, "How obvious was the difference?"));
    const row = el("div", { class: "likert-row" });
    for (const [value, label] of LIKERT_LABELS) {
      const wrap = el("label", {});
      const input = el("input", {
        type: "radio",
        name: "likert",
        value: String(value),
      });
      if (sel.likert === value) input.setAttribute("checked", "");
      input.addEventListener("change", () => handlers.onLikert(value));
      wrap.append(input, document.createTextNode(`${value} ${label}`));
      row.append(wrap);
    }
    fs.append(row);
    root.append(fs);
  }

  const actions = el("div", { class: "actions" });
  const confirm = el(
    "button",
    { class: "primary", type: "button", "data-role": "confirm" },
    "Confirm choice",
  );
  if (!canSubmit(pair, sel)) confirm.setAttribute("disabled", "");
  confirm.addEventListener("click", () => handlers.onConfirm());
  actions.append(confirm);
  actions.append(
    el(
      "span",
      { class: "hint" },
      pair.requires_likert
        ? "arrow keys choose, 1-5 rate, Enter confirms"
        : "arrow keys choose, Enter confirms",
    ),
  );
  root.append(actions);

  if (expiresAt !== undefined) {
    const when = new Date(expiresAt * 1000).toLocaleTimeString();
    root.append(
      el(
        "p",
        { class: "expiry" },
        `This session expires at ${when}; answers cannot be revisited.`,
      ),
    );
  }
}

export function renderSaving(root: HTMLElement): void {
  const confirm = root.querySelector<HTMLButtonElement>(
    'button[data-role="confirm"]',
  );
  if (confirm) {
    confirm.disabled = true;
    confirm.textContent = "Saving…";
  }
}

export function renderDone(root: HTMLElement, total: number): void {
  clear(root);
  root.append(el("h1", {}, "All done"));
  const box = el("div", { class: "notice" });
  box.append(
    el(
      "p",
      {},
      `Thank you. All ${total} answers were recorded. ` +
        "You can close this window.",
    ),
  );
  root.append(box);
}

export function renderExpired(root: HTMLElement): void {
  clear(root);
  root.append(el("h1", {}, "Session expired"));
  const box = el("div", { class: "notice error" });
  box.append(
    el(
      "p",
      {},
      "This session ran past its time limit, so it was closed. " +
        "The study must be completed in one sitting; please start again.",
    ),
  );
  root.append(box);
}

export function renderError(
  root: HTMLElement,
  message: string,
  onRetry?: () => void,
): void {
  clear(root);
  root.append(el("h1", {}, "Something went wrong"));
  const box = el("div", { class: "notice error" });
  box.append(el("p", {}, message));
  root.append(box);
  if (onRetry) {
    const button = el("button", { class: "primary", type: "button" }, "Retry");
    button.addEventListener("click", onRetry);
    const actions = el("div", { class: "actions" });
    actions.append(button);
    root.append(actions);
  }
}
