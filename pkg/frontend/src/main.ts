/** Single-page wiring: canvas + gallery + 3D view, all state server-side. */

import { ApiClient, type SessionInfo } from "./api.js";
import { SketchCanvas } from "./canvas.js";
import { GalleryPanel } from "./gallery.js";
import { ModelViewer } from "./viewer.js";

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const classes = await api.classes();
  const classSelect = el<HTMLSelectElement>("class-select");
  for (const c of classes.classes) {
    const opt = document.createElement("option");
    opt.value = c;
    opt.textContent = c;
    classSelect.appendChild(opt);
  }
  const categorySelect = el<HTMLSelectElement>("category-select");
  for (const c of classes.categories) {
    const opt = document.createElement("option");
    opt.value = c;
    opt.textContent = c;
    categorySelect.appendChild(opt);
  }

  let session: SessionInfo | null = null;
  let galleryToken = "";
  const status = el<HTMLSpanElement>("status");
  const viewer = new ModelViewer(el<HTMLDivElement>("viewer"));

  const sketch = new SketchCanvas(el<HTMLCanvasElement>("sketch"), 320, () => {
    void submit();
  });

  const gallery = new GalleryPanel(el<HTMLDivElement>("gallery"), (partId) => {
    void select(partId);
  });

  async function refreshShadow(): Promise<void> {
    if (!session) return;
    await sketch.setShadow(api.shadowUrl(session.session_id));
  }

  async function startSession(): Promise<void> {
    session = await api.createSession(classSelect.value);
    sketch.buffer.resize(session.canvas_size);
    sketch.canvas.width = session.canvas_size;
    sketch.canvas.height = session.canvas_size;
    sketch.clear();
    gallery.showPrompt();
    galleryToken = "";
    await refreshShadow();
    status.textContent = `session ${session.session_id.slice(0, 8)}`;
  }

  async function submit(): Promise<void> {
    if (!session || sketch.buffer.isEmpty) return;
    try {
      const resp = await api.submitStrokes(
        session.session_id,
        sketch.buffer.toPayload(categorySelect.value),
      );
      galleryToken = resp.gallery_token;
      gallery.render(resp.entries);
      status.textContent = `${resp.entries.length} candidates`;
    } catch (err) {
      status.textContent = String(err);
    }
  }

  async function select(partId: string): Promise<void> {
    if (!session || !galleryToken) return;
    try {
      // selection must await the placement result (no optimistic UI)
      const result = await api.selectPart(session.session_id, partId, galleryToken);
      galleryToken = "";
      gallery.showPrompt();
      sketch.clear();
      const obj = await api.fetchModel(session.session_id);
      viewer.loadObj(obj);
      await refreshShadow();
      status.textContent = `placed ${result.selected}` +
        (result.mirrored ? ` (+ mirrored ${result.mirrored})` : "") +
        ` | open: ${result.open_slots.join(", ") || "none"}`;
    } catch (err) {
      status.textContent = String(err);
    }
  }

  el<HTMLButtonElement>("new-session").addEventListener("click", () => void startSession());
  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    sketch.undo();
    void submit();
  });
  el<HTMLButtonElement>("clear").addEventListener("click", () => sketch.clear());
  el<HTMLButtonElement>("sketch-from-view").addEventListener("click", async () => {
    if (!session) return;
    await api.setView(session.session_id, viewer.currentDirection());
    sketch.clear();
    await refreshShadow();
  });
  el<HTMLButtonElement>("export").addEventListener("click", async () => {
    if (!session) return;
    const obj = await api.fetchModel(session.session_id);
    const blob = new Blob([obj], { type: "text/plain" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "assembly.obj";
    a.click();
  });

  await startSession();
}

boot().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = String(err);
});
