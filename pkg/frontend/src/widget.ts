/** Chat widget: welcome prompt, question entry, answers, suggestion chips,
 * and one helpfulness vote per answer.
 *
 * The widget keeps a single ask in flight (the input is disabled while
 * waiting), suggestion chips only fill the input (the human decides to
 * send), and vote buttons disappear after the first recorded vote. It makes
 * no request beyond /v1/health, /v1/ask and /v1/feedback.
 */

import { ApiError, ChatApi, FetchLike } from './api.js';

export type MessageKind = 'answered' | 'idk' | 'welcome';
export type Voted = 'unvoted' | 'yes' | 'no';

export interface ChatMessage {
  author: 'user' | 'agent';
  text: string;
  kind?: MessageKind;
  suggestions: string[];
  feedbackId?: string;
  voted: Voted;
}

export interface WidgetOptions {
  baseUrl: string;
  fetchFn?: FetchLike;
  welcomeText?: string;
  offlineText?: string;
}

const DEFAULT_WELCOME =
  'Welcome! I can answer questions about the tool from its user guide. ' +
  'Ask me anything, for example about parameters, units, or how to get started.';
const DEFAULT_OFFLINE = 'The answering service is offline. Please try again later.';

const STYLE_ID = 'guideqa-widget-style';
const CSS = `
.gqa-widget { display: flex; flex-direction: column; max-width: 420px; height: 560px;
  border: 1px solid #d0d4dc; border-radius: 10px; overflow: hidden;
  font-family: system-ui, -apple-system, "Segoe UI", sans-serif; background: #fff; }
.gqa-banner { background: #b33; color: #fff; padding: 8px 12px; font-size: 14px; }
.gqa-messages { flex: 1; overflow-y: auto; padding: 12px; display: flex;
  flex-direction: column; gap: 8px; }
.gqa-bubble { max-width: 85%; padding: 8px 12px; border-radius: 12px;
  font-size: 14px; line-height: 1.45; white-space: pre-wrap; word-break: break-word; }
.gqa-user { align-self: flex-end; background: #2563eb; color: #fff; }
.gqa-agent { align-self: flex-start; background: #eef1f6; color: #111; }
.gqa-chips { display: flex; flex-wrap: wrap; gap: 6px; margin-top: 6px; }
.gqa-chip { border: 1px solid #2563eb; color: #2563eb; background: #fff;
  border-radius: 999px; padding: 3px 10px; font-size: 13px; cursor: pointer; }
.gqa-chip:hover { background: #eaf0fe; }
.gqa-vote { margin-top: 6px; font-size: 13px; color: #444; display: flex;
  gap: 6px; align-items: center; }
.gqa-vote button { border: 1px solid #bbb; background: #fff; border-radius: 6px;
  padding: 2px 10px; cursor: pointer; font-size: 13px; }
.gqa-thanks { margin-top: 6px; font-size: 13px; color: #2a7d2a; }
.gqa-toast { margin-top: 6px; font-size: 13px; color: #b33; }
.gqa-form { display: flex; gap: 8px; padding: 10px; border-top: 1px solid #e2e5ea; }
.gqa-input { flex: 1; border: 1px solid #c6cbd4; border-radius: 8px;
  padding: 8px 10px; font-size: 14px; }
.gqa-send { border: 0; background: #2563eb; color: #fff; border-radius: 8px;
  padding: 8px 14px; font-size: 14px; cursor: pointer; }
.gqa-send:disabled { background: #9db6ee; cursor: default; }
.gqa-footer { padding: 4px 10px; font-size: 11px; color: #888;
  border-top: 1px solid #eee; }
`;

function ensureStyles(doc: Document): void {
  if (!doc.getElementById(STYLE_ID)) {
    const style = doc.createElement('style');
    style.id = STYLE_ID;
    style.textContent = CSS;
    doc.head.appendChild(style);
  }
}

export class ChatWidget {
  readonly api: ChatApi;
  readonly messages: ChatMessage[] = [];

  private readonly root: HTMLElement;
  private readonly doc: Document;
  private readonly welcomeText: string;
  private readonly offlineText: string;
  private messagesEl!: HTMLDivElement;
  private inputEl!: HTMLInputElement;
  private sendEl!: HTMLButtonElement;
  private footerEl!: HTMLDivElement;
  private asking = false;
  private online = false;

  constructor(root: HTMLElement, options: WidgetOptions) {
    this.root = root;
    this.doc = root.ownerDocument;
    this.api = new ChatApi(options.baseUrl, options.fetchFn);
    this.welcomeText = options.welcomeText ?? DEFAULT_WELCOME;
    this.offlineText = options.offlineText ?? DEFAULT_OFFLINE;
    ensureStyles(this.doc);
    this.render();
  }

  /** Health-check the service, then show the welcome prompt (or the offline
   * banner with the input disabled). */
  async boot(): Promise<void> {
    try {
      const health = await this.api.health();
      this.online = health.status === 'ready';
      if (this.online) {
        this.footerEl.textContent =
          health.kb_version === null ? 'guideqa' : `guideqa · knowledge base v${health.kb_version}`;
        this.appendAgent(this.welcomeText, 'welcome', [], undefined);
        this.inputEl.focus();
      }
    } catch {
      this.online = false;
    }
    if (!this.online) {
      const banner = this.doc.createElement('div');
      banner.className = 'gqa-banner';
      banner.textContent = this.offlineText;
      this.root.firstElementChild?.prepend(banner);
      this.inputEl.disabled = true;
      this.sendEl.disabled = true;
    }
  }

  /** Send one question; only one ask is in flight at a time. */
  async send(question: string): Promise<void> {
    const trimmed = question.trim();
    if (!trimmed || this.asking || !this.online) {
      return;
    }
    this.asking = true;
    this.inputEl.value = '';
    this.setBusy(true);
    this.appendUser(trimmed);
    try {
      const reply = await this.api.ask(trimmed);
      this.appendAgent(reply.answer, reply.kind, reply.suggestions, reply.feedback_id);
    } catch (error) {
      const detail = error instanceof ApiError ? error.message : 'network error';
      this.appendAgent(`Something went wrong (${detail}). Please try again.`, 'idk', [], undefined);
    } finally {
      this.asking = false;
      this.setBusy(false);
      this.inputEl.focus();
    }
  }

  private render(): void {
    const container = this.doc.createElement('div');
    container.className = 'gqa-widget';

    this.messagesEl = this.doc.createElement('div');
    this.messagesEl.className = 'gqa-messages';

    const form = this.doc.createElement('form');
    form.className = 'gqa-form';
    this.inputEl = this.doc.createElement('input');
    this.inputEl.className = 'gqa-input';
    this.inputEl.type = 'text';
    this.inputEl.placeholder = 'Ask a question…';
    this.inputEl.setAttribute('aria-label', 'Your question');
    this.sendEl = this.doc.createElement('button');
    this.sendEl.className = 'gqa-send';
    this.sendEl.type = 'submit';
    this.sendEl.textContent = 'Send';
    this.sendEl.disabled = true;
    this.inputEl.addEventListener('input', () => {
      this.sendEl.disabled = this.asking || !this.inputEl.value.trim();
    });
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      void this.send(this.inputEl.value);
    });
    form.append(this.inputEl, this.sendEl);

    this.footerEl = this.doc.createElement('div');
    this.footerEl.className = 'gqa-footer';
    this.footerEl.textContent = 'guideqa';

    container.append(this.messagesEl, form, this.footerEl);
    this.root.appendChild(container);
  }

  private setBusy(busy: boolean): void {
    this.inputEl.disabled = busy;
    this.sendEl.disabled = busy || !this.inputEl.value.trim();
  }

  private appendUser(text: string): void {
    this.messages.push({ author: 'user', text, suggestions: [], voted: 'unvoted' });
    const bubble = this.doc.createElement('div');
    bubble.className = 'gqa-bubble gqa-user';
    bubble.textContent = text;
    this.messagesEl.appendChild(bubble);
    this.scrollToEnd();
  }

  private appendAgent(text: string, kind: MessageKind, suggestions: string[],
                      feedbackId: string | undefined): void {
    const message: ChatMessage = {
      author: 'agent', text, kind, suggestions, feedbackId, voted: 'unvoted',
    };
    this.messages.push(message);

    const bubble = this.doc.createElement('div');
    bubble.className = 'gqa-bubble gqa-agent';
    bubble.dataset.kind = kind;
    const body = this.doc.createElement('div');
    body.textContent = text;
    bubble.appendChild(body);

    if (suggestions.length > 0) {
      const chips = this.doc.createElement('div');
      chips.className = 'gqa-chips';
      for (const suggestion of suggestions) {
        const chip = this.doc.createElement('button');
        chip.type = 'button';
        chip.className = 'gqa-chip';
        chip.textContent = suggestion;
        chip.addEventListener('click', () => {
          // fill the input only; the human decides to send
          this.inputEl.value = suggestion;
          this.inputEl.dispatchEvent(new Event('input'));
          this.inputEl.focus();
        });
        chips.appendChild(chip);
      }
      bubble.appendChild(chips);
    }

    if (feedbackId !== undefined) {
      bubble.appendChild(this.voteRow(message, feedbackId));
    }
    this.messagesEl.appendChild(bubble);
    this.scrollToEnd();
  }

  private voteRow(message: ChatMessage, feedbackId: string): HTMLDivElement {
    const row = this.doc.createElement('div');
    row.className = 'gqa-vote';
    const label = this.doc.createElement('span');
    label.textContent = 'Was this answer helpful?';
    const yes = this.doc.createElement('button');
    yes.type = 'button';
    yes.textContent = 'Yes';
    const no = this.doc.createElement('button');
    no.type = 'button';
    no.textContent = 'No';

    const settle = (cls: string, text: string) => {
      const note = this.doc.createElement('div');
      note.className = cls;
      note.textContent = text;
      row.replaceWith(note);
    };
    const vote = async (helpful: 'yes' | 'no') => {
      if (message.voted !== 'unvoted') {
        return;
      }
      yes.disabled = no.disabled = true;
      try {
        await this.api.feedback(feedbackId, helpful);
        message.voted = helpful;
        settle('gqa-thanks', 'Thanks!');
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          message.voted = helpful;
          settle('gqa-toast', 'Feedback already recorded.');
        } else {
          // leave the buttons usable as the retry affordance
          yes.disabled = no.disabled = false;
          this.flashToast(row, 'Could not send feedback — try again.');
        }
      }
    };
    yes.addEventListener('click', () => void vote('yes'));
    no.addEventListener('click', () => void vote('no'));
    row.append(label, yes, no);
    return row;
  }

  private flashToast(row: HTMLElement, text: string): void {
    let toast = row.querySelector<HTMLSpanElement>('.gqa-toast');
    if (!toast) {
      toast = this.doc.createElement('span');
      toast.className = 'gqa-toast';
      row.appendChild(toast);
    }
    toast.textContent = text;
  }

  private scrollToEnd(): void {
    this.messagesEl.scrollTop = this.messagesEl.scrollHeight;
  }
}

export function mountChatWidget(root: HTMLElement, options: WidgetOptions): ChatWidget {
  const widget = new ChatWidget(root, options);
  void widget.boot();
  return widget;
}
