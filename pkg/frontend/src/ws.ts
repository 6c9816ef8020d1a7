// Thin socket wrapper: connection state plus a send that reports success.

export interface SocketHandlers {
  onMessage: (text: string) => void;
  onOpen: () => void;
  onClose: () => void;
}

export interface Socket {
  send: (text: string) => boolean;
  close: () => void;
  readonly open: boolean;
}

export function connect(url: string, handlers: SocketHandlers): Socket {
  const ws = new WebSocket(url);
  let open = false;
  ws.onopen = () => {
    open = true;
    handlers.onOpen();
  };
  ws.onmessage = (ev: MessageEvent) => handlers.onMessage(String(ev.data));
  ws.onclose = () => {
    open = false;
    handlers.onClose();
  };
  ws.onerror = () => {
    // onclose follows; nothing to do here
  };
  return {
    send: (text: string) => {
      if (!open || ws.readyState !== WebSocket.OPEN) return false;
      ws.send(text);
      return true;
    },
    close: () => ws.close(),
    get open() {
      return open;
    },
  };
}

export function sessionUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const host = params.get('host') ?? window.location.hostname ?? '127.0.0.1';
  const port = params.get('port') ?? window.location.port ?? '8732';
  return `ws://${host}:${port}/ws`;
}
