import { SessionApi } from "./api";
import { SessionController, type ControllerElements } from "./controller";
import { Viewer } from "./viewer";

const LOD = 120_000;

function grab<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

async function boot(): Promise<void> {
  const canvas = grab<HTMLCanvasElement>("viewport");
  const viewer = new Viewer(canvas);
  const api = new SessionApi("");

  const elements: ControllerElements = {
    pairTable: grab<HTMLTableSectionElement>("pair-rows"),
    estimateButton: grab<HTMLButtonElement>("estimate"),
    previewToggle: grab<HTMLInputElement>("preview-toggle"),
    exportButton: grab<HTMLButtonElement>("export"),
    exportPath: grab<HTMLInputElement>("export-path"),
    modeSelect: grab<HTMLSelectElement>("mode"),
    rmseLabel: grab("rmse"),
    banner: grab("banner"),
    hint: grab("hint"),
    status: grab("status"),
  };

  const controller = new SessionController(api, elements, {
    refreshMarkers() {
      viewer.setMarkers(
        controller.picks.pairs,
        controller.picks.pending,
        controller.picks.selectedPairId,
      );
    },
    async showPreview(on: boolean) {
      if (!on) {
        viewer.setPreview(null);
        viewer.setSourceVisible(true);
        return;
      }
      viewer.setPreview(await api.preview(LOD));
      viewer.setSourceVisible(false);
    },
  });

  const layout = grab<HTMLInputElement>("side-by-side");
  layout.addEventListener("change", () => {
    viewer.setSideBySide(layout.checked);
    viewer.setMarkers(
      controller.picks.pairs,
      controller.picks.pending,
      controller.picks.selectedPairId,
    );
  });

  const resize = () => {
    const rect = canvas.parentElement!.getBoundingClientRect();
    viewer.resize(rect.width, rect.height);
  };
  window.addEventListener("resize", resize);
  resize();

  canvas.addEventListener("click", (event) => {
    const rect = canvas.getBoundingClientRect();
    const hit = viewer.pick(event.clientX - rect.left, event.clientY - rect.top);
    if (hit) {
      void controller.handlePick(hit.cloud, hit.point, hit.index);
    }
  });
  canvas.addEventListener("contextmenu", () => controller.picks.clearPending());

  try {
    const [source, target] = await Promise.all([
      api.getCloud("source", LOD),
      api.getCloud("target", LOD),
    ]);
    viewer.setClouds(source, target);
    grab("status").textContent =
      `source ${source.count.toLocaleString()} pts / ` +
      `target ${target.count.toLocaleString()} pts`;
  } catch (err) {
    const banner = grab("banner");
    banner.textContent = `server unreachable: ${String(err)}`;
    banner.style.display = "block";
  }
  await controller.refreshPairs();
}

void boot();
