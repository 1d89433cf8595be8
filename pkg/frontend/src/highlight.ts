// Cosmetic syntax highlighting. Output is HTML; the stored source is
// never modified, only escaped and wrapped in spans.

const KEYWORDS: Record<string, string[]> = {
  python: ['def', 'return', 'if', 'else', 'elif', 'for', 'while', 'import', 'from',
    'class', 'try', 'except', 'finally', 'with', 'as', 'lambda', 'print',
    'True', 'False', 'None', 'raise', 'in', 'not', 'and', 'or', 'pass'],
  cpp: ['int', 'char', 'bool', 'void', 'return', 'if', 'else', 'for', 'while',
    'include', 'class', 'struct', 'public', 'private', 'const', 'std'],
  java: ['public', 'private', 'static', 'void', 'class', 'int', 'new', 'return',
    'if', 'else', 'for', 'while', 'try', 'catch', 'throws', 'String'],
};

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#039;');
}

export function highlight(source: string, languageHint: string): string {
  const words = KEYWORDS[languageHint] ?? [];
  let html = escapeHtml(source);
  html = html.replace(/(&quot;.*?&quot;|&#039;.*?&#039;)/g, '<span class="hl-str">$1</span>');
  html = html.replace(/(^|\n)(\s*#[^\n]*)/g, '$1<span class="hl-com">$2</span>');
  if (words.length) {
    const pattern = new RegExp(`\\b(${words.join('|')})\\b`, 'g');
    html = html.replace(pattern, '<span class="hl-kw">$1</span>');
  }
  return html;
}
