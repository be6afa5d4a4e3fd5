/** Script-tag entry point. Embeds the widget into the element named by
 * data-target (or a container appended to <body>) and points it at
 * data-base-url. */

import { ChatWidget, mountChatWidget } from './widget.js';

export { ApiError, ChatApi } from './api.js';
export type { AskResponse, FetchLike, HealthResponse } from './api.js';
export { ChatWidget, mountChatWidget } from './widget.js';
export type { ChatMessage, WidgetOptions } from './widget.js';

declare global {
  interface Window {
    guideqaWidget?: ChatWidget;
  }
}

function autoMount(): void {
  const script = document.currentScript as HTMLScriptElement | null;
  if (!script || script.dataset.baseUrl === undefined) {
    return;
  }
  const mount = () => {
    const targetId = script.dataset.target;
    let root = targetId ? document.getElementById(targetId) : null;
    if (!root) {
      root = document.createElement('div');
      document.body.appendChild(root);
    }
    window.guideqaWidget = mountChatWidget(root, { baseUrl: script.dataset.baseUrl! });
  };
  if (document.readyState === 'loading') {
    document.addEventListener('DOMContentLoaded', mount, { once: true });
  } else {
    mount();
  }
}

if (typeof document !== 'undefined') {
  autoMount();
}
