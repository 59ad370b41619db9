export default {
  test: {
    environment: "node",
    testTimeout: 30_000,
    hookTimeout: 240_000,
    // the e2e suite boots one service; parallel files would race on it
    fileParallelism: false,
  },
};
