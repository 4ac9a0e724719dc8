namespace cmj {}
