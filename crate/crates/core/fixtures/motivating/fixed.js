'use strict';
import ENV from 'pass-ember/config/environment';
import { get } from '@ember/object';
import CheckSessionRoute from '../../check-session-route';
function service(user) {
	return {
		...user,
		userToken: get('currentUser.accessKey'),
		userSecret:  get('currentUser.userSecret'),
	};
}
const user = get('currentUser.user');
export default CheckSessionRoute.extend({
  currentUser: service(user),
  model() {
    const store = this.get('store');
    const params = this.paramsFor('passwords');
    let query = {
      owner: params.owner,
      limit: ENV.APP.pageSize,
    };
    if (params.folder) {
      query.folder = params.folder;
    }
    return store.query('password', query);
  },

  afterModel(model, transition) {
    if (model.get('length') === 0) {
      this.transitionTo('passwords.new');
    }
    return this._super(model, transition);
  },

  setupController(controller, model) {
    this._super(controller, model);
    controller.set('entries', model);
    controller.set('filter', '');
    controller.set('isLoading', false);
  },

  actions: {
    refresh() {
      this.refresh();
    },

    willTransition(transition) {
      const controller = this.controllerFor('passwords');
      if (controller.get('hasChanges')) {
        const leave = window.confirm('Discard unsaved changes?');
        if (!leave) {
          transition.abort();
          return false;
        }
      }
      return true;
    },

    error(reason) {
      if (reason.status === 401) {
        this.transitionTo('login');
      }
      return true;
    },
  },
});
