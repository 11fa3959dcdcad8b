/** Frame-sequence playback with a translucent mask overlay.
 *
 * Frames and masks are preloaded <img> elements drawn onto one canvas at the
 * manifest fps; no <video> element is involved, so the overlay stays
 * frame-exact. Playback loops.
 */

export const MASK_OVERLAY_ALPHA = 0.45;
export const MASK_OVERLAY_COLOR = "255, 64, 64";

export function parseFps(fps: string): number {
  const [num, den] = fps.split("/");
  const value = den ? Number(num) / Number(den) : Number(num);
  return Number.isFinite(value) && value > 0 ? value : 30;
}

/** Index of the frame to show `elapsedMs` after playback start. */
export function frameIndexAt(elapsedMs: number, fps: number, frameCount: number): number {
  if (frameCount <= 1) return 0;
  return Math.floor((elapsedMs / 1000) * fps) % frameCount;
}

function loadImage(url: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error(`failed to load ${url}`));
    img.src = url;
  });
}

export class FramePlayer {
  private frames: HTMLImageElement[] = [];
  private masks: HTMLImageElement[] = [];
  private fps = 30;
  private timer: number | null = null;
  private startedAt = 0;

  constructor(private readonly canvas: HTMLCanvasElement) {}

  async load(frameUrls: string[], maskUrls: string[], fps: string): Promise<void> {
    this.stop();
    this.fps = parseFps(fps);
    [this.frames, this.masks] = await Promise.all([
      Promise.all(frameUrls.map(loadImage)),
      Promise.all(maskUrls.map(loadImage)),
    ]);
    const first = this.frames[0];
    if (first) {
      this.canvas.width = first.naturalWidth;
      this.canvas.height = first.naturalHeight;
    }
    this.startedAt = performance.now();
    this.draw(0);
    if (this.frames.length > 1) {
      this.timer = window.setInterval(() => this.tick(), 1000 / Math.max(this.fps, 1));
    }
  }

  private tick(): void {
    const elapsed = performance.now() - this.startedAt;
    this.draw(frameIndexAt(elapsed, this.fps, this.frames.length));
  }

  private draw(index: number): void {
    const frame = this.frames[index];
    const mask = this.masks[index];
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !frame) return;
    ctx.globalCompositeOperation = "source-over";
    ctx.globalAlpha = 1;
    ctx.drawImage(frame, 0, 0);
    if (mask) {
      // tint the editing region: draw the mask into an offscreen canvas,
      // colorize it, then blend it over the frame
      const off = document.createElement("canvas");
      off.width = this.canvas.width;
      off.height = this.canvas.height;
      const octx = off.getContext("2d");
      if (octx) {
        octx.drawImage(mask, 0, 0);
        octx.globalCompositeOperation = "source-in";
        octx.fillStyle = `rgb(${MASK_OVERLAY_COLOR})`;
        octx.fillRect(0, 0, off.width, off.height);
        ctx.globalAlpha = MASK_OVERLAY_ALPHA;
        ctx.drawImage(off, 0, 0);
        ctx.globalAlpha = 1;
      }
    }
  }

  stop(): void {
    if (this.timer !== null) {
      window.clearInterval(this.timer);
      this.timer = null;
    }
  }
}
