// The service payload -> DOM mapping, pinned by snapshots: cards must
// mirror API items one to one, weak tags stay out of card chips, dead
// datasets never reach the page.

import { beforeEach, describe, expect, it, vi } from "vitest";

import { DatasetDoc, EntityCard, SearchHit } from "../src/api.js";
import {
  createDatasetCard,
  createEntityCard,
  liveOnly,
  renderDatasetTier,
  renderSidebar,
  renderSummaryTier,
  showBanner,
  tallyTags,
  truncateDescription,
} from "../src/render.js";

function doc(overrides: Partial<DatasetDoc>): DatasetDoc {
  return {
    id: "d1",
    name: "Harbor Tide Gauge",
    desc: "Water level gauge readings collected from sandstone piers.",
    url: "https://figshare.example.com/good/tide-gauge",
    source: "figshare",
    data_type: "tabular",
    scale: "42k rows",
    tags: ["water level", "level gauge"],
    tags_weak: ["coastal monitoring"],
    alive: "alive",
    ...overrides,
  };
}

function hit(overrides: Partial<SearchHit>): SearchHit {
  return { ...doc({}), score: 4.974922837066976, ...overrides };
}

const ENTITY: EntityCard = {
  name: "figshare",
  kind: "site",
  description: "General-purpose research data repository.",
  domain: "figshare.com",
  activity_focus: "open research data hosting",
};

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="c"></div>';
  container = document.querySelector<HTMLElement>("#c")!;
});

describe("dataset cards", () => {
  it("renders every field from the payload item", () => {
    container.appendChild(createDatasetCard(doc({}), 4.975, () => undefined));
    expect(container.innerHTML).toMatchSnapshot();
  });

  it("omits the score line when no score is given", () => {
    container.appendChild(createDatasetCard(doc({}), null, () => undefined));
    expect(container.querySelector(".dataset-score")).toBeNull();
  });

  it("never shows weakly-related tags as chips", () => {
    container.appendChild(createDatasetCard(doc({}), null, () => undefined));
    const chips = [...container.querySelectorAll(".tag-chip")].map(
      (chip) => chip.textContent,
    );
    expect(chips).toEqual(["water level", "level gauge"]);
    expect(chips).not.toContain("coastal monitoring");
  });

  it("links out to the dataset URL in a new tab", () => {
    container.appendChild(createDatasetCard(doc({}), null, () => undefined));
    const link = container.querySelector<HTMLAnchorElement>(".dataset-link")!;
    expect(link.href).toBe("https://figshare.example.com/good/tide-gauge");
    expect(link.target).toBe("_blank");
  });

  it("fires the pivot callback from the card title", () => {
    const onPivot = vi.fn();
    container.appendChild(createDatasetCard(doc({}), null, onPivot));
    container.querySelector<HTMLAnchorElement>(".dataset-name a")!.click();
    expect(onPivot).toHaveBeenCalledWith(expect.objectContaining({ id: "d1" }));
  });
});

describe("description truncation", () => {
  it("passes short text through unchanged", () => {
    expect(truncateDescription("short text")).toBe("short text");
  });

  it("cuts long text at a word boundary with an ellipsis", () => {
    const long = "word ".repeat(60).trim();
    const cut = truncateDescription(long);
    expect(cut.length).toBeLessThanOrEqual(161);
    expect(cut.endsWith("…")).toBe(true);
    expect(cut).not.toMatch(/ …$/);
  });
});

describe("entity cards", () => {
  it("shows name, kind badge, description, and domain", () => {
    container.appendChild(createEntityCard(ENTITY, () => undefined));
    expect(container.innerHTML).toMatchSnapshot();
  });

  it("fires the pivot callback", () => {
    const onPivot = vi.fn();
    container.appendChild(createEntityCard(ENTITY, onPivot));
    container.querySelector<HTMLAnchorElement>(".entity-name a")!.click();
    expect(onPivot).toHaveBeenCalledWith(
      expect.objectContaining({ name: "figshare" }),
    );
  });
});

describe("dead dataset handling", () => {
  it("drops alive=dead items before rendering", () => {
    const spy = vi.spyOn(console, "error").mockImplementation(() => undefined);
    const items = [
      hit({ id: "a1" }),
      hit({ id: "a2", name: "Gone", alive: "dead" }),
    ];
    renderDatasetTier(container, items, {
      emptyMessage: "none",
      onPivot: () => undefined,
    });
    expect(
      [...container.querySelectorAll<HTMLElement>(".dataset-card")].map(
        (card) => card.dataset.id,
      ),
    ).toEqual(["a1"]);
    expect(container.textContent).not.toContain("Gone");
    expect(spy).toHaveBeenCalled();
    spy.mockRestore();
  });

  it("liveOnly keeps unknown and alive states", () => {
    const items = [hit({ id: "a1" }), hit({ id: "a2", alive: "unknown" })];
    expect(liveOnly(items).map((item) => item.id)).toEqual(["a1", "a2"]);
  });
});

describe("dataset tier", () => {
  it("keeps payload order and shows one card per item", () => {
    const items = [hit({ id: "a1" }), hit({ id: "a2", name: "Second" })];
    renderDatasetTier(container, items, {
      emptyMessage: "none",
      onPivot: () => undefined,
    });
    expect(container.querySelectorAll(".dataset-card").length).toBe(2);
    expect(
      [...container.querySelectorAll<HTMLElement>(".dataset-card")].map(
        (card) => card.dataset.id,
      ),
    ).toEqual(["a1", "a2"]);
  });

  it("shows the guidance message when empty", () => {
    renderDatasetTier(container, [], {
      emptyMessage: "No datasets matched.",
      onPivot: () => undefined,
    });
    expect(container.querySelector(".empty-state")!.textContent).toBe(
      "No datasets matched.",
    );
  });
});

describe("tag sidebar", () => {
  it("tallies tags across cards and sorts by count then name", () => {
    const items = [
      doc({ id: "a1", tags: ["water level", "tide"], tags_weak: ["coastal"] }),
      doc({ id: "a2", tags: ["tide"], tags_weak: [] }),
      doc({ id: "a3", tags: ["buoy"], tags_weak: ["coastal"] }),
    ];
    expect(tallyTags(items)).toEqual([
      { tag: "coastal", count: 2, weakOnly: true },
      { tag: "tide", count: 2, weakOnly: false },
      { tag: "buoy", count: 1, weakOnly: false },
      { tag: "water level", count: 1, weakOnly: false },
    ]);
  });

  it("renders counts and marks weak-only tags", () => {
    const items = [
      doc({ id: "a1", tags: ["tide"], tags_weak: ["coastal"] }),
      doc({ id: "a2", tags: ["tide"], tags_weak: [] }),
    ];
    renderSidebar(container, items, {
      activeTag: null,
      onRefine: () => undefined,
      onClearFilter: () => undefined,
    });
    expect(container.innerHTML).toMatchSnapshot();
    const weak = container.querySelector(".tag-weak .tag-name")!;
    expect(weak.textContent).toBe("coastal");
  });

  it("shows a removable chip for the active filter", () => {
    const onClear = vi.fn();
    renderSidebar(container, [], {
      activeTag: "tide",
      onRefine: () => undefined,
      onClearFilter: onClear,
    });
    const chip = container.querySelector<HTMLButtonElement>(".filter-chip")!;
    expect(chip.textContent).toContain("tide");
    chip.click();
    expect(onClear).toHaveBeenCalled();
  });

  it("refines through a tag click", () => {
    const onRefine = vi.fn();
    renderSidebar(container, [doc({})], {
      activeTag: null,
      onRefine,
      onClearFilter: () => undefined,
    });
    container.querySelector<HTMLAnchorElement>(".tag-name")!.click();
    expect(onRefine).toHaveBeenCalled();
  });
});

describe("summary tier and banner", () => {
  it("renders the summary text and exploration gain", () => {
    renderSummaryTier(container, "Datasets relevant to tides.", 100.0);
    expect(container.innerHTML).toMatchSnapshot();
  });

  it("omits the gain line when not given", () => {
    renderSummaryTier(container, "Just text.", null);
    expect(container.querySelector(".summary-gain")).toBeNull();
  });

  it("shows a retryable banner", () => {
    const onRetry = vi.fn();
    showBanner(container, "The catalog service is unreachable.", onRetry);
    expect(container.hidden).toBe(false);
    container.querySelector<HTMLButtonElement>(".retry-button")!.click();
    expect(onRetry).toHaveBeenCalled();
  });
});
