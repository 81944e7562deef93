// Small element-building helpers for the dashboard's plain-DOM rendering.

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function svgEl(tag: string): SVGElement {
  return document.createElementNS("http://www.w3.org/2000/svg", tag);
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export function toast(message: string): void {
  const host = document.getElementById("toasts");
  if (!host) return;
  const node = el("div", "toast", message);
  host.appendChild(node);
  setTimeout(() => node.remove(), 6000);
}
