"""
The simulator and its two reward channels
=========================================

The environment advances the vehicle by exact arc segments at a fixed
speed, one of seven turn rates per step.  Training shapes behavior with a
dense imitation term (stay near the expert's track) plus a sparse goal
term (sense tasks, finish the set); evaluation reads the goal term only.
"""

import numpy as np

from dtspn import DtspnEnv, EnvConfig, generate, plan
from dtspn.demos import greedy_action, track_target
from dtspn.env import goal_reward, imitation_reward

# the imitation term is deliberately lumpy: free inside 3 m, quadratic
# up to the cutoff, then a flat penalty
for r in (0.0, 3.0, 5.0, 10.0, 30.0, 60.0, 61.0, 200.0):
    print(f"  distance {r:5.1f} m -> imitation reward {imitation_reward(r):8.3f}")

# the goal term pays a small keep-alive, a bounty per newly sensed task,
# and a jackpot for clearing the set
print("step, 0 new:", goal_reward(0, False, 20))
print("step, 1 new:", goal_reward(1, False, 20))
print("last task:  ", goal_reward(2, True, 20))

x = generate(n_tasks=6, seed=11, map_size=(400.0, 400.0))
path = plan(x)
env = DtspnEnv(x, path, mode="eval", config=EnvConfig())
obs = env.reset()
print(f"observation: common {obs.common.shape[0]} dims, "
      f"privileged {obs.privileged.shape[0]} dims")

# drive with the greedy tracker and watch both channels accumulate
total_im, total_go, t = 0.0, 0.0, 0
done = False
while not done:
    a = greedy_action(env.state.pose, track_target(env.state, path),
                      env.config)
    obs, rew, done, info = env.step(a)
    total_im += rew.imitation
    total_go += rew.goal
    t += 1
print(f"greedy tracking: {t} steps, imitation total {total_im:.2f}, "
      f"goal total {total_go:.2f}, sensed {int(np.sum(env.state.sensed))}/6")

# a straight-line driver ignores the track and pays for it
env2 = DtspnEnv(x, path, mode="eval", config=EnvConfig())
env2.reset()
straight = env2.config.n_actions // 2
im2 = 0.0
for _ in range(t):
    _, rew, done, _ = env2.step(straight)
    im2 += rew.imitation
    if done:
        break
print(f"always-straight driver over the same horizon: imitation {im2:.2f}")
