// DOM builders for the three-tier layout: summary on top, entity cards
// in the middle, dataset cards at the bottom, and the tag sidebar on
// the left. Every rendered value comes straight from an API payload;
// the only derivations are presentational (description truncation and
// the sidebar tally of tags across the cards already on screen).

import { DatasetDoc, EntityCard, SearchHit } from "./api.js";

const DESC_LIMIT = 160;

export interface TagCount {
  tag: string;
  count: number;
  /* never appears as a selected tag on any visible card */
  weakOnly: boolean;
}

export function truncateDescription(text: string): string {
  if (text.length <= DESC_LIMIT) return text;
  const cut = text.slice(0, DESC_LIMIT);
  const space = cut.lastIndexOf(" ");
  return `${cut.slice(0, space > 0 ? space : DESC_LIMIT)}…`;
}

// The service already hides gated datasets; dropping them here as well
// guarantees a dead record can never reach the page even if a payload
// slips through.
export function liveOnly<T extends DatasetDoc>(items: T[]): T[] {
  const live = items.filter((item) => item.alive !== "dead");
  if (live.length !== items.length) {
    console.error("dropped dead dataset(s) from a service payload");
  }
  return live;
}

export function tallyTags(items: DatasetDoc[]): TagCount[] {
  const counts = new Map<string, number>();
  const selectedAnywhere = new Set<string>();
  for (const item of items) {
    for (const tag of item.tags) {
      counts.set(tag, (counts.get(tag) ?? 0) + 1);
      selectedAnywhere.add(tag);
    }
    for (const tag of item.tags_weak) {
      counts.set(tag, (counts.get(tag) ?? 0) + 1);
    }
  }
  const tally = [...counts.entries()].map(([tag, count]) => ({
    tag,
    count,
    weakOnly: !selectedAnywhere.has(tag),
  }));
  tally.sort((a, b) => b.count - a.count || a.tag.localeCompare(b.tag));
  return tally;
}

export function createDatasetCard(
  doc: DatasetDoc,
  score: number | null,
  onPivot: (doc: DatasetDoc) => void,
): HTMLElement {
  const card = document.createElement("article");
  card.className = "dataset-card";
  card.dataset.id = doc.id;
  card.dataset.source = doc.source;

  const heading = document.createElement("h3");
  heading.className = "dataset-name";
  const pivotLink = document.createElement("a");
  pivotLink.href = "#";
  pivotLink.textContent = doc.name;
  pivotLink.addEventListener("click", (event) => {
    event.preventDefault();
    onPivot(doc);
  });
  heading.appendChild(pivotLink);

  const desc = document.createElement("p");
  desc.className = "dataset-desc";
  desc.textContent = truncateDescription(doc.desc);

  const meta = document.createElement("p");
  meta.className = "dataset-meta";
  const source = document.createElement("span");
  source.className = "dataset-source";
  source.textContent = doc.source;
  meta.appendChild(source);
  if (score !== null) {
    const scoreSpan = document.createElement("span");
    scoreSpan.className = "dataset-score";
    scoreSpan.textContent = `score ${score.toFixed(3)}`;
    meta.appendChild(scoreSpan);
  }
  const outbound = document.createElement("a");
  outbound.className = "dataset-link";
  outbound.href = doc.url;
  outbound.target = "_blank";
  outbound.rel = "noopener noreferrer";
  outbound.textContent = "open";
  meta.appendChild(outbound);

  // Only selected tags associate a dataset; weakly-related tags belong
  // to the sidebar and never appear as chips on a card.
  const tags = document.createElement("ul");
  tags.className = "dataset-tags";
  for (const tag of doc.tags) {
    const chip = document.createElement("li");
    chip.className = "tag-chip";
    chip.textContent = tag;
    tags.appendChild(chip);
  }

  card.appendChild(heading);
  card.appendChild(desc);
  card.appendChild(meta);
  if (doc.tags.length > 0) card.appendChild(tags);
  return card;
}

export function createEntityCard(
  card: EntityCard,
  onPivot: (card: EntityCard) => void,
): HTMLElement {
  const el = document.createElement("article");
  el.className = "entity-card";
  el.dataset.entity = card.name;

  const heading = document.createElement("h3");
  heading.className = "entity-name";
  const pivotLink = document.createElement("a");
  pivotLink.href = "#";
  pivotLink.textContent = card.name;
  pivotLink.addEventListener("click", (event) => {
    event.preventDefault();
    onPivot(card);
  });
  heading.appendChild(pivotLink);

  const badge = document.createElement("span");
  badge.className = `kind-badge kind-${card.kind}`;
  badge.textContent = card.kind;
  heading.appendChild(badge);

  const desc = document.createElement("p");
  desc.className = "entity-desc";
  desc.textContent = card.description;

  const domain = document.createElement("p");
  domain.className = "entity-domain";
  domain.textContent = card.domain;

  el.appendChild(heading);
  el.appendChild(desc);
  el.appendChild(domain);
  return el;
}

export function renderSummaryTier(
  container: HTMLElement,
  summary: string,
  gain: number | null,
): void {
  container.innerHTML = "";
  const text = document.createElement("p");
  text.className = "summary-text";
  text.textContent = summary;
  container.appendChild(text);
  if (gain !== null) {
    const gainLine = document.createElement("p");
    gainLine.className = "summary-gain";
    gainLine.textContent = `Exploration gain: ${gain}%`;
    container.appendChild(gainLine);
  }
}

export function renderEntityTier(
  container: HTMLElement,
  cards: EntityCard[],
  onPivot: (card: EntityCard) => void,
): void {
  container.innerHTML = "";
  for (const card of cards) {
    container.appendChild(createEntityCard(card, onPivot));
  }
}

export interface DatasetTierOptions {
  emptyMessage: string;
  onPivot: (doc: DatasetDoc) => void;
}

export function renderDatasetTier(
  container: HTMLElement,
  items: (DatasetDoc | SearchHit)[],
  options: DatasetTierOptions,
): void {
  container.innerHTML = "";
  const visible = liveOnly(items);
  if (visible.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = options.emptyMessage;
    container.appendChild(empty);
    return;
  }
  for (const item of visible) {
    const score = "score" in item ? item.score : null;
    container.appendChild(createDatasetCard(item, score, options.onPivot));
  }
}

export interface SidebarOptions {
  activeTag: string | null;
  onRefine: (tag: string) => void;
  onClearFilter: () => void;
}

export function renderSidebar(
  container: HTMLElement,
  items: DatasetDoc[],
  options: SidebarOptions,
): void {
  container.innerHTML = "";

  if (options.activeTag) {
    const chip = document.createElement("button");
    chip.type = "button";
    chip.className = "filter-chip";
    chip.textContent = `${options.activeTag} ✕`;
    chip.title = "Remove this filter";
    chip.addEventListener("click", options.onClearFilter);
    container.appendChild(chip);
  }

  const list = document.createElement("ul");
  list.className = "tag-list";
  for (const entry of tallyTags(liveOnly(items))) {
    const row = document.createElement("li");
    row.className = entry.weakOnly ? "tag-row tag-weak" : "tag-row";
    const link = document.createElement("a");
    link.href = "#";
    link.className = "tag-name";
    link.textContent = entry.tag;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      options.onRefine(entry.tag);
    });
    const count = document.createElement("span");
    count.className = "tag-count";
    count.textContent = String(entry.count);
    row.appendChild(link);
    row.appendChild(count);
    list.appendChild(row);
  }
  container.appendChild(list);
}

export function showBanner(
  container: HTMLElement,
  message: string,
  onRetry: (() => void) | null,
): void {
  container.innerHTML = "";
  const banner = document.createElement("div");
  banner.className = "error-banner";
  const text = document.createElement("span");
  text.textContent = message;
  banner.appendChild(text);
  if (onRetry) {
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "retry-button";
    retry.textContent = "Retry";
    retry.addEventListener("click", onRetry);
    banner.appendChild(retry);
  }
  container.appendChild(banner);
  container.hidden = false;
}

export function clearBanner(container: HTMLElement): void {
  container.innerHTML = "";
  container.hidden = true;
}
