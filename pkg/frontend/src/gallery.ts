/** Suggestion panel: score-ordered thumbnails, selection callback. */

import type { GalleryEntry } from "./api.js";

export class GalleryPanel {
  constructor(
    private root: HTMLElement,
    private onSelect: (partId: string) => void,
  ) {
    this.showPrompt();
  }

  showPrompt(): void {
    this.root.innerHTML = '<p class="prompt">Sketch a part to see suggestions.</p>';
  }

  render(entries: GalleryEntry[]): void {
    this.root.innerHTML = "";
    if (entries.length === 0) {
      this.showPrompt();
      return;
    }
    for (const entry of entries) {
      const card = document.createElement("button");
      card.className = "gallery-card";
      card.title = `${entry.part_id}\nscore ${entry.score.toFixed(3)}`;
      const img = document.createElement("img");
      img.src = entry.thumb_url;
      img.alt = entry.part_id;
      card.appendChild(img);
      const label = document.createElement("span");
      label.textContent = entry.score > 0 ? entry.score.toFixed(2) : "";
      card.appendChild(label);
      if (entry.origin === "suggested") {
        const badge = document.createElement("em");
        badge.className = "badge";
        badge.textContent = "suggested";
        card.appendChild(badge);
      }
      card.addEventListener("click", () => this.onSelect(entry.part_id));
      this.root.appendChild(card);
    }
  }
}
