/** Minimal observable value: hold the latest snapshot, notify subscribers. */

export type Listener<T> = (value: T) => void

export class Store<T> {
  private value: T
  private listeners = new Set<Listener<T>>()

  constructor(initial: T) {
    this.value = initial
  }

  get(): T {
    return this.value
  }

  set(next: T): void {
    this.value = next
    for (const fn of this.listeners) fn(next)
  }

  update(fn: (value: T) => T): void {
    this.set(fn(this.value))
  }

  subscribe(fn: Listener<T>): () => void {
    this.listeners.add(fn)
    fn(this.value)
    return () => this.listeners.delete(fn)
  }
}
